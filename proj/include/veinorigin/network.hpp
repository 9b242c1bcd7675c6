#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "veinorigin/arch.hpp"
#include "veinorigin/error.hpp"
#include "veinorigin/rng.hpp"
#include "veinorigin/tensor.hpp"

namespace veinorigin {

template <typename T>
struct ParamBlob {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty for non-trainable blobs
  bool trainable = true;

  std::int64_t count() const {
    std::int64_t c = 1;
    for (int d : shape) c *= d;
    return c;
  }
};

struct StepStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

namespace detail {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapM = Eigen::Map<const MatRM<T>>;

inline std::pair<int, int> pad_begin(int in, int out, int kernel, int stride, Padding padding) {
  if (padding == Padding::valid) return {0, 0};
  const int total = std::max(0, (out - 1) * stride + kernel - in);
  return {total / 2, total - total / 2};
}

/// Patch matrix for GEMM-based convolution: row (n, oy, ox), column
/// (ky, kx, c); out-of-image taps are zero.
template <typename T>
void im2col(const Tensor<T>& x, int kernel, int stride, int pt, int pl, int oh, int ow,
            std::vector<T>& out) {
  const int cols = kernel * kernel * x.c;
  out.assign(static_cast<std::size_t>(x.n) * oh * ow * cols, T(0));
  std::size_t r = 0;
  for (int in = 0; in < x.n; ++in)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox, ++r) {
        T* dst = out.data() + r * cols;
        for (int ky = 0; ky < kernel; ++ky) {
          const int iy = oy * stride - pt + ky;
          if (iy < 0 || iy >= x.h) continue;
          for (int kx = 0; kx < kernel; ++kx) {
            const int ix = ox * stride - pl + kx;
            if (ix < 0 || ix >= x.w) continue;
            const T* src = x.data.data() +
                           ((static_cast<std::size_t>(in) * x.h + iy) * x.w + ix) * x.c;
            T* d = dst + (ky * kernel + kx) * x.c;
            for (int c = 0; c < x.c; ++c) d[c] = src[c];
          }
        }
      }
}

template <typename T>
void col2im(const std::vector<T>& cols_data, Tensor<T>& dx, int kernel, int stride, int pt,
            int pl, int oh, int ow) {
  const int cols = kernel * kernel * dx.c;
  std::size_t r = 0;
  for (int in = 0; in < dx.n; ++in)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox, ++r) {
        const T* src = cols_data.data() + r * cols;
        for (int ky = 0; ky < kernel; ++ky) {
          const int iy = oy * stride - pt + ky;
          if (iy < 0 || iy >= dx.h) continue;
          for (int kx = 0; kx < kernel; ++kx) {
            const int ix = ox * stride - pl + kx;
            if (ix < 0 || ix >= dx.w) continue;
            T* d = dx.data.data() +
                   ((static_cast<std::size_t>(in) * dx.h + iy) * dx.w + ix) * dx.c;
            const T* s = src + (ky * kernel + kx) * dx.c;
            for (int c = 0; c < dx.c; ++c) d[c] += s[c];
          }
        }
      }
}

}  // namespace detail

/// Executable instance of an ArchitectureConfig: owns parameters, runs
/// forward and backprop over the DAG. Single-threaded and deterministic for
/// a fixed seed.
template <typename T>
class Network {
 public:
  Network(const ArchitectureConfig& arch, std::uint64_t seed) : arch_(arch) {
    const auto node_shapes = infer_shapes(arch);
    std::map<std::string, TensorShape> shape_of;
    for (const auto& ns : node_shapes) shape_of[ns.id] = ns.shape;

    std::map<std::string, int> index;
    // Execution follows the topological order computed by infer_shapes.
    for (const auto& ns : node_shapes) {
      for (std::size_t i = 0; i < arch.nodes.size(); ++i) {
        if (arch.nodes[i].id == ns.id) {
          Node node;
          node.spec = arch.nodes[i];
          node.out_shape = ns.shape;
          index[ns.id] = static_cast<int>(nodes_.size());
          nodes_.push_back(std::move(node));
          break;
        }
      }
    }
    for (const auto& [from, to] : arch.edges) nodes_[index.at(to)].in.push_back(index.at(from));
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      for (int src : nodes_[i].in) nodes_[src].fanout += 1;

    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].in.empty()) input_node_ = static_cast<int>(i);
      if (nodes_[i].fanout == 0) output_node_ = static_cast<int>(i);
    }

    init_params(seed);
  }

  const ArchitectureConfig& arch() const { return arch_; }
  int num_classes() const { return arch_.num_classes; }

  void set_capture(bool on) { capture_ = on; }

  std::vector<ParamBlob<T>*> trainable_params() {
    std::vector<ParamBlob<T>*> out;
    for (auto& p : params_)
      if (p.trainable) out.push_back(&p);
    return out;
  }

  std::vector<ParamBlob<T>>& all_params() { return params_; }
  const std::vector<ParamBlob<T>>& all_params() const { return params_; }

  ParamBlob<T>* find_param(const std::string& name) {
    for (auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

  void zero_grad() {
    for (auto& p : params_)
      std::fill(p.grad.begin(), p.grad.end(), T(0));
  }

  /// Forward pass; returns the softmax output of shape (n, 1, 1, classes).
  /// `training` selects batch statistics in batch_norm; running statistics
  /// are only updated when `update_stats` is also set.
  Tensor<T> forward(const Tensor<T>& input, bool training = false, bool update_stats = false) {
    check_input(input);
    acts_.assign(nodes_.size(), Tensor<T>());
    if (input.n == 0)
      return Tensor<T>(0, 1, 1, arch_.num_classes);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Tensor<T>& in0 = nodes_[i].in.empty() ? input : acts_[nodes_[i].in[0]];
      acts_[i] = node_forward(nodes_[i], in0, training, training && update_stats);
    }
    return acts_[output_node_];
  }

  /// Forward in training mode, cross-entropy loss, full backprop. Parameter
  /// gradients are left in the blobs for the optimizer.
  StepStats train_step(const Tensor<T>& input, const std::vector<int>& labels) {
    if (input.n == 0) raise(errc::too_few_samples, "empty batch");
    zero_grad();
    const Tensor<T> probs = forward(input, true, true);
    StepStats stats = loss_from_probs(probs, labels);

    // Fused softmax + cross-entropy gradient, injected at the softmax input.
    std::vector<Tensor<T>> grads(nodes_.size());
    const int softmax_in = nodes_[output_node_].in[0];
    Tensor<T>& g = grads[softmax_in];
    g = Tensor<T>(probs.n, probs.h, probs.w, probs.c);
    const T inv_n = T(1) / static_cast<T>(input.n);
    for (int r = 0; r < probs.n; ++r)
      for (int k = 0; k < probs.c; ++k)
        g.data[static_cast<std::size_t>(r) * probs.c + k] =
            (probs.data[static_cast<std::size_t>(r) * probs.c + k] -
             (labels[r] == k ? T(1) : T(0))) *
            inv_n;

    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      if (i == output_node_) continue;  // softmax handled by the fused gradient
      if (grads[i].data.empty()) continue;
      const Tensor<T>& in0 = nodes_[i].in.empty() ? input : acts_[nodes_[i].in[0]];
      node_backward(nodes_[i], in0, i, grads);
      if (!capture_) {
        grads[i].release();
        acts_[i].release();
      }
    }
    return stats;
  }

  /// Loss/accuracy without gradients or side effects.
  StepStats evaluate_batch(const Tensor<T>& input, const std::vector<int>& labels,
                           bool training_mode = false) {
    const Tensor<T> probs = forward(input, training_mode, false);
    return loss_from_probs(probs, labels);
  }

  /// Activation of a node from the last forward (requires set_capture(true)).
  const Tensor<T>& activation(const std::string& node_id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].spec.id == node_id) {
        if (acts_[i].data.empty() && acts_[i].size() != 0)
          raise(errc::invalid_argument, "activation not captured for " + node_id);
        return acts_[i];
      }
    raise(errc::invalid_argument, "no such node: " + node_id);
  }

  StepStats loss_from_probs(const Tensor<T>& probs, const std::vector<int>& labels) const {
    if (static_cast<int>(labels.size()) != probs.n)
      raise(errc::shape_error, "labels/batch size mismatch");
    StepStats s;
    if (probs.n == 0) return s;
    double loss = 0.0;
    int correct = 0;
    for (int r = 0; r < probs.n; ++r) {
      const T* row = probs.data.data() + static_cast<std::size_t>(r) * probs.c;
      if (labels[r] < 0 || labels[r] >= probs.c)
        raise(errc::invalid_argument, "label out of range");
      loss -= std::log(std::max(static_cast<double>(row[labels[r]]), 1e-300));
      int best = 0;
      for (int k = 1; k < probs.c; ++k)
        if (row[k] > row[best]) best = k;
      correct += (best == labels[r]) ? 1 : 0;
    }
    s.loss = loss / probs.n;
    s.accuracy = static_cast<double>(correct) / probs.n;
    return s;
  }

 private:
  struct Node {
    LayerSpec spec;
    std::vector<int> in;
    int fanout = 0;
    TensorShape out_shape;
    // Blob indices (-1 when absent).
    int w = -1, b = -1, w2 = -1, gamma = -1, beta = -1, rmean = -1, rvar = -1;
    // Per-batch caches for backward.
    std::vector<T> bn_mean, bn_var;
    Tensor<T> depthwise_out;
    std::vector<std::int32_t> pool_argmax;
  };

  ArchitectureConfig arch_;
  std::vector<Node> nodes_;
  std::vector<ParamBlob<T>> params_;
  std::vector<Tensor<T>> acts_;
  int input_node_ = -1;
  int output_node_ = -1;
  bool capture_ = false;
  static constexpr double kBnEps = 1e-5;
  static constexpr double kBnMomentum = 0.1;

  void check_input(const Tensor<T>& input) const {
    if (input.h != arch_.input_shape[0] || input.w != arch_.input_shape[1] ||
        input.c != arch_.input_shape[2])
      raise(errc::shape_error,
            "input tensor " + std::to_string(input.h) + "x" + std::to_string(input.w) + "x" +
                std::to_string(input.c) + " does not match architecture input " +
                std::to_string(arch_.input_shape[0]) + "x" + std::to_string(arch_.input_shape[1]) +
                "x" + std::to_string(arch_.input_shape[2]));
  }

  int add_blob(const std::string& name, std::vector<int> shape, bool trainable) {
    ParamBlob<T> blob;
    blob.name = name;
    blob.shape = std::move(shape);
    blob.trainable = trainable;
    std::int64_t count = blob.count();
    blob.value.assign(count, T(0));
    if (trainable) blob.grad.assign(count, T(0));
    params_.push_back(std::move(blob));
    return static_cast<int>(params_.size()) - 1;
  }

  void fill_fan_in_uniform(ParamBlob<T>& blob, int fan_in, Rng& rng) {
    const double limit = std::sqrt(3.0 / std::max(1, fan_in));
    for (auto& v : blob.value) v = static_cast<T>(rng.uniform(-limit, limit));
  }

  void init_params(std::uint64_t seed) {
    int blob_tag = 0;
    for (auto& node : nodes_) {
      const LayerSpec& s = node.spec;
      Rng rng(derive_seed(seed, 0xb10b0000u + blob_tag));
      ++blob_tag;
      switch (s.kind) {
        case LayerKind::conv: {
          node.w = add_blob(s.id + ".w", {s.kernel, s.kernel, s.in_channels, s.out_channels}, true);
          fill_fan_in_uniform(params_[node.w], s.kernel * s.kernel * s.in_channels, rng);
          if (s.bias) node.b = add_blob(s.id + ".b", {s.out_channels}, true);
          break;
        }
        case LayerKind::separable_conv: {
          node.w = add_blob(s.id + ".dw", {s.kernel, s.kernel, s.in_channels}, true);
          fill_fan_in_uniform(params_[node.w], s.kernel * s.kernel, rng);
          node.w2 = add_blob(s.id + ".pw", {s.in_channels, s.out_channels}, true);
          fill_fan_in_uniform(params_[node.w2], s.in_channels, rng);
          if (s.bias) node.b = add_blob(s.id + ".b", {s.out_channels}, true);
          break;
        }
        case LayerKind::fully_connected: {
          node.w = add_blob(s.id + ".w", {s.in_channels, s.out_channels}, true);
          fill_fan_in_uniform(params_[node.w], s.in_channels, rng);
          if (s.bias) node.b = add_blob(s.id + ".b", {s.out_channels}, true);
          break;
        }
        case LayerKind::batch_norm: {
          node.gamma = add_blob(s.id + ".gamma", {s.in_channels}, true);
          std::fill(params_[node.gamma].value.begin(), params_[node.gamma].value.end(), T(1));
          node.beta = add_blob(s.id + ".beta", {s.in_channels}, true);
          node.rmean = add_blob(s.id + ".running_mean", {s.in_channels}, false);
          node.rvar = add_blob(s.id + ".running_var", {s.in_channels}, false);
          std::fill(params_[node.rvar].value.begin(), params_[node.rvar].value.end(), T(1));
          break;
        }
        default:
          break;
      }
    }
  }

  Tensor<T> node_forward(Node& node, const Tensor<T>& in0, bool training,
                         bool update_stats) {
    const LayerSpec& s = node.spec;
    switch (s.kind) {
      case LayerKind::conv:            return conv_forward(node, in0);
      case LayerKind::separable_conv:  return sep_forward(node, in0);
      case LayerKind::batch_norm:      return bn_forward(node, in0, training, update_stats);
      case LayerKind::relu:            return relu_forward(in0);
      case LayerKind::max_pool:        return pool_forward(node, in0);
      case LayerKind::global_avg_pool: return gap_forward(in0);
      case LayerKind::fully_connected: return fc_forward(node, in0);
      case LayerKind::softmax:         return softmax_forward(in0);
      case LayerKind::add: {
        const Tensor<T>& a = acts_[node.in[0]];
        const Tensor<T>& b = acts_[node.in[1]];
        if (!a.same_shape(b)) raise(errc::shape_error, "add shape mismatch at " + s.id);
        Tensor<T> out = a;
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
        return out;
      }
    }
    raise(errc::shape_error, "unhandled layer kind at " + s.id);
  }

  // ---- conv ----

  Tensor<T> conv_forward(Node& node, const Tensor<T>& x) {
    const LayerSpec& s = node.spec;
    const int oh = conv_out_extent(x.h, s.kernel, s.stride, s.padding);
    const int ow = conv_out_extent(x.w, s.kernel, s.stride, s.padding);
    const auto [pt, pb] = detail::pad_begin(x.h, oh, s.kernel, s.stride, s.padding);
    const auto [pl, pr] = detail::pad_begin(x.w, ow, s.kernel, s.stride, s.padding);
    (void)pb; (void)pr;

    Tensor<T> y(x.n, oh, ow, s.out_channels);
    const std::int64_t rows = static_cast<std::int64_t>(x.n) * oh * ow;
    const int cols = s.kernel * s.kernel * s.in_channels;
    detail::CMapM<T> w(params_[node.w].value.data(), cols, s.out_channels);
    detail::MapM<T> ym(y.data.data(), rows, s.out_channels);
    if (s.kernel == 1 && s.stride == 1) {
      detail::CMapM<T> xm(x.data.data(), rows, s.in_channels);
      ym.noalias() = xm * w;
    } else {
      std::vector<T> patches;
      detail::im2col(x, s.kernel, s.stride, pt, pl, oh, ow, patches);
      detail::CMapM<T> pm(patches.data(), rows, cols);
      ym.noalias() = pm * w;
    }
    if (node.b >= 0) {
      const auto& b = params_[node.b].value;
      for (std::int64_t r = 0; r < rows; ++r) {
        T* dst = y.data.data() + r * s.out_channels;
        for (int o = 0; o < s.out_channels; ++o) dst[o] += b[o];
      }
    }
    return y;
  }

  void conv_backward(Node& node, const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx) {
    const LayerSpec& s = node.spec;
    const int oh = dy.h, ow = dy.w;
    const auto [pt, pb] = detail::pad_begin(x.h, oh, s.kernel, s.stride, s.padding);
    const auto [pl, pr] = detail::pad_begin(x.w, ow, s.kernel, s.stride, s.padding);
    (void)pb; (void)pr;
    const std::int64_t rows = static_cast<std::int64_t>(x.n) * oh * ow;
    const int cols = s.kernel * s.kernel * s.in_channels;

    detail::CMapM<T> dym(dy.data.data(), rows, s.out_channels);
    detail::MapM<T> dwm(params_[node.w].grad.data(), cols, s.out_channels);
    if (node.b >= 0) {
      auto& db = params_[node.b].grad;
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* src = dy.data.data() + r * s.out_channels;
        for (int o = 0; o < s.out_channels; ++o) db[o] += src[o];
      }
    }

    if (s.kernel == 1 && s.stride == 1) {
      detail::CMapM<T> xm(x.data.data(), rows, s.in_channels);
      dwm.noalias() += xm.transpose() * dym;
      if (dx) {
        detail::CMapM<T> w(params_[node.w].value.data(), cols, s.out_channels);
        detail::MapM<T> dxm(dx->data.data(), rows, s.in_channels);
        dxm.noalias() += dym * w.transpose();
      }
      return;
    }

    std::vector<T> patches;
    detail::im2col(x, s.kernel, s.stride, pt, pl, oh, ow, patches);
    detail::CMapM<T> pm(patches.data(), rows, cols);
    dwm.noalias() += pm.transpose() * dym;
    if (dx) {
      std::vector<T> dpatches(patches.size());
      detail::MapM<T> dpm(dpatches.data(), rows, cols);
      detail::CMapM<T> w(params_[node.w].value.data(), cols, s.out_channels);
      dpm.noalias() = dym * w.transpose();
      detail::col2im(dpatches, *dx, s.kernel, s.stride, pt, pl, oh, ow);
    }
  }

  // ---- separable conv ----

  void depthwise_forward(const LayerSpec& s, const Tensor<T>& x, const std::vector<T>& wd,
                         Tensor<T>& d) const {
    const int k = s.kernel;
    const auto [pt, pb] = detail::pad_begin(x.h, d.h, k, s.stride, s.padding);
    const auto [pl, pr] = detail::pad_begin(x.w, d.w, k, s.stride, s.padding);
    (void)pb; (void)pr;
    for (int in = 0; in < x.n; ++in)
      for (int oy = 0; oy < d.h; ++oy)
        for (int ox = 0; ox < d.w; ++ox) {
          T* dst = d.data.data() + ((static_cast<std::size_t>(in) * d.h + oy) * d.w + ox) * x.c;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * s.stride - pt + ky;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * s.stride - pl + kx;
              if (ix < 0 || ix >= x.w) continue;
              const T* src =
                  x.data.data() + ((static_cast<std::size_t>(in) * x.h + iy) * x.w + ix) * x.c;
              const T* wrow = wd.data() + static_cast<std::size_t>(ky * k + kx) * x.c;
              for (int c = 0; c < x.c; ++c) dst[c] += src[c] * wrow[c];
            }
          }
        }
  }

  Tensor<T> sep_forward(Node& node, const Tensor<T>& x) {
    const LayerSpec& s = node.spec;
    const int oh = conv_out_extent(x.h, s.kernel, s.stride, s.padding);
    const int ow = conv_out_extent(x.w, s.kernel, s.stride, s.padding);

    Tensor<T> d(x.n, oh, ow, s.in_channels);
    depthwise_forward(s, x, params_[node.w].value, d);

    Tensor<T> y(x.n, oh, ow, s.out_channels);
    const std::int64_t rows = static_cast<std::int64_t>(x.n) * oh * ow;
    detail::CMapM<T> dm(d.data.data(), rows, s.in_channels);
    detail::CMapM<T> wp(params_[node.w2].value.data(), s.in_channels, s.out_channels);
    detail::MapM<T> ym(y.data.data(), rows, s.out_channels);
    ym.noalias() = dm * wp;
    if (node.b >= 0) {
      const auto& b = params_[node.b].value;
      for (std::int64_t r = 0; r < rows; ++r) {
        T* dst = y.data.data() + r * s.out_channels;
        for (int o = 0; o < s.out_channels; ++o) dst[o] += b[o];
      }
    }
    node.depthwise_out = std::move(d);
    return y;
  }

  void sep_backward(Node& node, const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx) {
    const LayerSpec& s = node.spec;
    const int k = s.kernel;
    const int oh = dy.h, ow = dy.w;
    const std::int64_t rows = static_cast<std::int64_t>(x.n) * oh * ow;
    const Tensor<T>& d = node.depthwise_out;

    if (node.b >= 0) {
      auto& db = params_[node.b].grad;
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* src = dy.data.data() + r * s.out_channels;
        for (int o = 0; o < s.out_channels; ++o) db[o] += src[o];
      }
    }

    // Pointwise stage.
    detail::CMapM<T> dym(dy.data.data(), rows, s.out_channels);
    detail::CMapM<T> dm(d.data.data(), rows, s.in_channels);
    detail::MapM<T> dwp(params_[node.w2].grad.data(), s.in_channels, s.out_channels);
    dwp.noalias() += dm.transpose() * dym;

    Tensor<T> dd(x.n, oh, ow, s.in_channels);
    detail::CMapM<T> wp(params_[node.w2].value.data(), s.in_channels, s.out_channels);
    detail::MapM<T> ddm(dd.data.data(), rows, s.in_channels);
    ddm.noalias() = dym * wp.transpose();

    // Depthwise stage.
    const auto [pt, pb] = detail::pad_begin(x.h, oh, k, s.stride, s.padding);
    const auto [pl, pr] = detail::pad_begin(x.w, ow, k, s.stride, s.padding);
    (void)pb; (void)pr;
    auto& dwd = params_[node.w].grad;
    const auto& wd = params_[node.w].value;
    for (int in = 0; in < x.n; ++in)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const T* g = dd.data.data() + ((static_cast<std::size_t>(in) * oh + oy) * ow + ox) * x.c;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * s.stride - pt + ky;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * s.stride - pl + kx;
              if (ix < 0 || ix >= x.w) continue;
              const std::size_t xoff =
                  ((static_cast<std::size_t>(in) * x.h + iy) * x.w + ix) * x.c;
              const std::size_t woff = static_cast<std::size_t>(ky * k + kx) * x.c;
              const T* xs = x.data.data() + xoff;
              for (int c = 0; c < x.c; ++c) dwd[woff + c] += xs[c] * g[c];
              if (dx) {
                T* dxs = dx->data.data() + xoff;
                const T* ws = wd.data() + woff;
                for (int c = 0; c < x.c; ++c) dxs[c] += ws[c] * g[c];
              }
            }
          }
        }
    node.depthwise_out.release();
  }

  // ---- batch norm ----

  Tensor<T> bn_forward(Node& node, const Tensor<T>& x, bool training, bool update_stats) {
    const int C = x.c;
    const std::int64_t m = static_cast<std::int64_t>(x.n) * x.h * x.w;
    auto& gamma = params_[node.gamma].value;
    auto& beta = params_[node.beta].value;
    auto& rmean = params_[node.rmean].value;
    auto& rvar = params_[node.rvar].value;

    std::vector<T> mean(C, T(0)), var(C, T(0));
    if (training) {
      for (std::int64_t r = 0; r < m; ++r) {
        const T* src = x.data.data() + r * C;
        for (int c = 0; c < C; ++c) mean[c] += src[c];
      }
      for (int c = 0; c < C; ++c) mean[c] /= static_cast<T>(m);
      for (std::int64_t r = 0; r < m; ++r) {
        const T* src = x.data.data() + r * C;
        for (int c = 0; c < C; ++c) {
          const T d = src[c] - mean[c];
          var[c] += d * d;
        }
      }
      for (int c = 0; c < C; ++c) var[c] /= static_cast<T>(m);
      if (update_stats) {
        for (int c = 0; c < C; ++c) {
          rmean[c] += static_cast<T>(kBnMomentum) * (mean[c] - rmean[c]);
          rvar[c] += static_cast<T>(kBnMomentum) * (var[c] - rvar[c]);
        }
      }
      node.bn_mean = mean;
      node.bn_var = var;
    } else {
      mean.assign(rmean.begin(), rmean.end());
      var.assign(rvar.begin(), rvar.end());
    }

    Tensor<T> y(x.n, x.h, x.w, x.c);
    std::vector<T> scale(C), shift(C);
    for (int c = 0; c < C; ++c) {
      scale[c] = gamma[c] / std::sqrt(var[c] + static_cast<T>(kBnEps));
      shift[c] = beta[c] - mean[c] * scale[c];
    }
    for (std::int64_t r = 0; r < m; ++r) {
      const T* src = x.data.data() + r * C;
      T* dst = y.data.data() + r * C;
      for (int c = 0; c < C; ++c) dst[c] = src[c] * scale[c] + shift[c];
    }
    return y;
  }

  void bn_backward(Node& node, const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx,
                   bool batch_stats) {
    const int C = x.c;
    const std::int64_t m = static_cast<std::int64_t>(x.n) * x.h * x.w;
    auto& gamma = params_[node.gamma].value;
    auto& dgamma = params_[node.gamma].grad;
    auto& dbeta = params_[node.beta].grad;
    const std::vector<T>& mean = batch_stats ? node.bn_mean : params_[node.rmean].value;
    const std::vector<T>& var = batch_stats ? node.bn_var : params_[node.rvar].value;

    std::vector<T> inv_std(C);
    for (int c = 0; c < C; ++c) inv_std[c] = T(1) / std::sqrt(var[c] + static_cast<T>(kBnEps));

    std::vector<T> sum_dy(C, T(0)), sum_dy_xhat(C, T(0));
    for (std::int64_t r = 0; r < m; ++r) {
      const T* xs = x.data.data() + r * C;
      const T* gs = dy.data.data() + r * C;
      for (int c = 0; c < C; ++c) {
        sum_dy[c] += gs[c];
        sum_dy_xhat[c] += gs[c] * (xs[c] - mean[c]) * inv_std[c];
      }
    }
    for (int c = 0; c < C; ++c) {
      dbeta[c] += sum_dy[c];
      dgamma[c] += sum_dy_xhat[c];
    }
    if (!dx) return;

    if (batch_stats) {
      std::vector<T> k1(C), k2(C), k3(C);
      for (int c = 0; c < C; ++c) {
        k1[c] = gamma[c] * inv_std[c];
        k2[c] = sum_dy[c] / static_cast<T>(m);
        k3[c] = sum_dy_xhat[c] / static_cast<T>(m);
      }
      for (std::int64_t r = 0; r < m; ++r) {
        const T* xs = x.data.data() + r * C;
        const T* gs = dy.data.data() + r * C;
        T* ds = dx->data.data() + r * C;
        for (int c = 0; c < C; ++c) {
          const T xhat = (xs[c] - mean[c]) * inv_std[c];
          ds[c] += k1[c] * (gs[c] - k2[c] - xhat * k3[c]);
        }
      }
    } else {
      for (std::int64_t r = 0; r < m; ++r) {
        const T* gs = dy.data.data() + r * C;
        T* ds = dx->data.data() + r * C;
        for (int c = 0; c < C; ++c) ds[c] += gs[c] * gamma[c] * inv_std[c];
      }
    }
  }

  // ---- element-wise and pooling ----

  Tensor<T> relu_forward(const Tensor<T>& x) const {
    Tensor<T> y = x;
    for (auto& v : y.data) v = std::max(v, T(0));
    return y;
  }

  Tensor<T> pool_forward(Node& node, const Tensor<T>& x) {
    const LayerSpec& s = node.spec;
    const int oh = conv_out_extent(x.h, s.kernel, s.stride, s.padding);
    const int ow = conv_out_extent(x.w, s.kernel, s.stride, s.padding);
    const auto [pt, pb] = detail::pad_begin(x.h, oh, s.kernel, s.stride, s.padding);
    const auto [pl, pr] = detail::pad_begin(x.w, ow, s.kernel, s.stride, s.padding);
    (void)pb; (void)pr;
    Tensor<T> y(x.n, oh, ow, x.c);
    node.pool_argmax.assign(y.data.size(), -1);
    for (int in = 0; in < x.n; ++in)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          for (int c = 0; c < x.c; ++c) {
            T best = -std::numeric_limits<T>::infinity();
            std::int64_t best_idx = -1;
            for (int ky = 0; ky < s.kernel; ++ky) {
              const int iy = oy * s.stride - pt + ky;
              if (iy < 0 || iy >= x.h) continue;
              for (int kx = 0; kx < s.kernel; ++kx) {
                const int ix = ox * s.stride - pl + kx;
                if (ix < 0 || ix >= x.w) continue;
                const std::int64_t idx =
                    ((static_cast<std::int64_t>(in) * x.h + iy) * x.w + ix) * x.c + c;
                if (x.data[idx] > best) {
                  best = x.data[idx];
                  best_idx = idx;
                }
              }
            }
            const std::int64_t oidx =
                ((static_cast<std::int64_t>(in) * oh + oy) * ow + ox) * x.c + c;
            y.data[oidx] = best;
            node.pool_argmax[oidx] = static_cast<std::int32_t>(best_idx);
          }
    return y;
  }

  Tensor<T> gap_forward(const Tensor<T>& x) const {
    Tensor<T> y(x.n, 1, 1, x.c);
    const T inv = T(1) / static_cast<T>(x.h * x.w);
    for (int in = 0; in < x.n; ++in) {
      T* dst = y.data.data() + static_cast<std::size_t>(in) * x.c;
      for (int iy = 0; iy < x.h; ++iy)
        for (int ix = 0; ix < x.w; ++ix) {
          const T* src =
              x.data.data() + ((static_cast<std::size_t>(in) * x.h + iy) * x.w + ix) * x.c;
          for (int c = 0; c < x.c; ++c) dst[c] += src[c];
        }
      for (int c = 0; c < x.c; ++c) dst[c] *= inv;
    }
    return y;
  }

  Tensor<T> fc_forward(Node& node, const Tensor<T>& x) {
    const LayerSpec& s = node.spec;
    const std::int64_t flat = static_cast<std::int64_t>(x.h) * x.w * x.c;
    if (flat != s.in_channels) raise(errc::shape_error, "fc input mismatch at " + s.id);
    Tensor<T> y(x.n, 1, 1, s.out_channels);
    detail::CMapM<T> xm(x.data.data(), x.n, flat);
    detail::CMapM<T> wm(params_[node.w].value.data(), flat, s.out_channels);
    detail::MapM<T> ym(y.data.data(), x.n, s.out_channels);
    ym.noalias() = xm * wm;
    if (node.b >= 0) {
      const auto& b = params_[node.b].value;
      for (int r = 0; r < x.n; ++r) {
        T* dst = y.data.data() + static_cast<std::size_t>(r) * s.out_channels;
        for (int o = 0; o < s.out_channels; ++o) dst[o] += b[o];
      }
    }
    return y;
  }

  Tensor<T> softmax_forward(const Tensor<T>& x) const {
    Tensor<T> y = x;
    const std::int64_t rows = static_cast<std::int64_t>(x.n) * x.h * x.w;
    for (std::int64_t r = 0; r < rows; ++r) {
      T* row = y.data.data() + r * x.c;
      T mx = row[0];
      for (int c = 1; c < x.c; ++c) mx = std::max(mx, row[c]);
      T sum = T(0);
      for (int c = 0; c < x.c; ++c) {
        row[c] = std::exp(row[c] - mx);
        sum += row[c];
      }
      for (int c = 0; c < x.c; ++c) row[c] /= sum;
    }
    return y;
  }

  void node_backward(Node& node, const Tensor<T>& in0, std::size_t ni,
                     std::vector<Tensor<T>>& grads) {
    const LayerSpec& s = node.spec;
    const Tensor<T>& dy = grads[ni];

    auto grad_of = [&](int src) -> Tensor<T>* {
      if (src < 0) return nullptr;  // gradient w.r.t. the network input is not needed
      Tensor<T>& g = grads[src];
      if (g.data.empty()) {
        const Tensor<T>& a = acts_[src];
        g = Tensor<T>(a.n, a.h, a.w, a.c);
      }
      return &g;
    };
    const int src0 = node.in.empty() ? -1 : node.in[0];

    switch (s.kind) {
      case LayerKind::conv:
        conv_backward(node, in0, dy, grad_of(src0));
        break;
      case LayerKind::separable_conv:
        sep_backward(node, in0, dy, grad_of(src0));
        break;
      case LayerKind::batch_norm:
        bn_backward(node, in0, dy, grad_of(src0), /*batch_stats=*/true);
        break;
      case LayerKind::relu: {
        Tensor<T>* dx = grad_of(src0);
        if (!dx) break;
        const Tensor<T>& y = acts_[ni];
        for (std::size_t i = 0; i < y.data.size(); ++i)
          if (y.data[i] > T(0)) dx->data[i] += dy.data[i];
        break;
      }
      case LayerKind::max_pool: {
        Tensor<T>* dx = grad_of(src0);
        if (!dx) break;
        for (std::size_t i = 0; i < dy.data.size(); ++i) {
          const std::int32_t idx = node.pool_argmax[i];
          if (idx >= 0) dx->data[idx] += dy.data[i];
        }
        break;
      }
      case LayerKind::global_avg_pool: {
        Tensor<T>* dx = grad_of(src0);
        if (!dx) break;
        const T inv = T(1) / static_cast<T>(dx->h * dx->w);
        for (int in = 0; in < dx->n; ++in) {
          const T* g = dy.data.data() + static_cast<std::size_t>(in) * dx->c;
          for (int iy = 0; iy < dx->h; ++iy)
            for (int ix = 0; ix < dx->w; ++ix) {
              T* d = dx->data.data() +
                     ((static_cast<std::size_t>(in) * dx->h + iy) * dx->w + ix) * dx->c;
              for (int c = 0; c < dx->c; ++c) d[c] += g[c] * inv;
            }
        }
        break;
      }
      case LayerKind::fully_connected: {
        const std::int64_t flat = static_cast<std::int64_t>(in0.h) * in0.w * in0.c;
        detail::CMapM<T> xm(in0.data.data(), in0.n, flat);
        detail::CMapM<T> dym(dy.data.data(), dy.n, s.out_channels);
        detail::MapM<T> dwm(params_[node.w].grad.data(), flat, s.out_channels);
        dwm.noalias() += xm.transpose() * dym;
        if (node.b >= 0) {
          auto& db = params_[node.b].grad;
          for (int r = 0; r < dy.n; ++r) {
            const T* src = dy.data.data() + static_cast<std::size_t>(r) * s.out_channels;
            for (int o = 0; o < s.out_channels; ++o) db[o] += src[o];
          }
        }
        if (Tensor<T>* dx = grad_of(src0)) {
          detail::CMapM<T> wm(params_[node.w].value.data(), flat, s.out_channels);
          detail::MapM<T> dxm(dx->data.data(), dx->n, flat);
          dxm.noalias() += dym * wm.transpose();
        }
        break;
      }
      case LayerKind::add: {
        for (int which = 0; which < 2; ++which) {
          if (Tensor<T>* dx = grad_of(node.in[which])) {
            for (std::size_t i = 0; i < dy.data.size(); ++i) dx->data[i] += dy.data[i];
          }
        }
        break;
      }
      case LayerKind::softmax:
        break;  // fused with the loss
    }
  }
};

}  // namespace veinorigin
