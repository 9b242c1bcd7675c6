#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "veinorigin/error.hpp"

namespace veinorigin {

inline constexpr int kArchSchemaVersion = 1;

enum class LayerKind {
  conv,
  separable_conv,
  batch_norm,
  relu,
  max_pool,
  global_avg_pool,
  fully_connected,
  softmax,
  add,
};

enum class Padding { same, valid };

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv:            return "conv";
    case LayerKind::separable_conv:  return "separable_conv";
    case LayerKind::batch_norm:      return "batch_norm";
    case LayerKind::relu:            return "relu";
    case LayerKind::max_pool:        return "max_pool";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::softmax:         return "softmax";
    case LayerKind::add:             return "add";
  }
  return "?";
}

inline LayerKind parse_layer_kind(const std::string& s) {
  static const std::map<std::string, LayerKind> table = {
      {"conv", LayerKind::conv},
      {"separable_conv", LayerKind::separable_conv},
      {"batch_norm", LayerKind::batch_norm},
      {"relu", LayerKind::relu},
      {"max_pool", LayerKind::max_pool},
      {"global_avg_pool", LayerKind::global_avg_pool},
      {"fully_connected", LayerKind::fully_connected},
      {"softmax", LayerKind::softmax},
      {"add", LayerKind::add},
  };
  const auto it = table.find(s);
  if (it == table.end()) raise(errc::parse_error, "unknown layer kind: " + s);
  return it->second;
}

struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::relu;
  int kernel = 0;   // conv / separable_conv / max_pool
  int stride = 1;
  Padding padding = Padding::same;
  int in_channels = 0;   // conv-like, batch_norm, fully_connected
  int out_channels = 0;
  bool bias = true;      // conv, separable_conv, fully_connected

  bool operator==(const LayerSpec&) const = default;
};

/// Declarative network: a DAG of layer nodes with one source (fed the input
/// tensor) and one softmax sink. Skip and residual connections are plain
/// extra edges into `add` nodes.
struct ArchitectureConfig {
  std::string name;
  std::array<int, 3> input_shape{96, 96, 1};  // h, w, c
  int num_classes = 8;
  std::vector<LayerSpec> nodes;
  std::vector<std::pair<std::string, std::string>> edges;  // from -> to

  const LayerSpec* find(const std::string& id) const {
    for (const auto& n : nodes)
      if (n.id == id) return &n;
    return nullptr;
  }
};

struct TensorShape {
  int h = 0, w = 0, c = 0;
  bool operator==(const TensorShape&) const = default;
  std::int64_t elements() const {
    return static_cast<std::int64_t>(h) * w * c;
  }
};

inline int conv_out_extent(int in, int kernel, int stride, Padding padding) {
  if (padding == Padding::same) return (in + stride - 1) / stride;
  if (in < kernel) return 0;
  return (in - kernel) / stride + 1;
}

namespace detail {

inline std::vector<std::size_t> topological_order(const ArchitectureConfig& arch) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < arch.nodes.size(); ++i) {
    if (!index.emplace(arch.nodes[i].id, i).second)
      raise(errc::shape_error, "duplicate node id: " + arch.nodes[i].id);
  }
  std::vector<int> indegree(arch.nodes.size(), 0);
  std::vector<std::vector<std::size_t>> out(arch.nodes.size());
  for (const auto& [from, to] : arch.edges) {
    const auto fi = index.find(from);
    const auto ti = index.find(to);
    if (fi == index.end() || ti == index.end())
      raise(errc::shape_error, "edge references unknown node: " + from + " -> " + to);
    out[fi->second].push_back(ti->second);
    ++indegree[ti->second];
  }
  std::vector<std::size_t> order;
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < arch.nodes.size(); ++i)
    if (indegree[i] == 0) ready.push_back(i);
  if (ready.size() != 1)
    raise(errc::shape_error, "graph must have exactly one input node, found " +
                                 std::to_string(ready.size()));
  while (!ready.empty()) {
    // Smallest index first keeps the order deterministic.
    std::sort(ready.begin(), ready.end(), std::greater<>());
    const std::size_t n = ready.back();
    ready.pop_back();
    order.push_back(n);
    for (std::size_t m : out[n])
      if (--indegree[m] == 0) ready.push_back(m);
  }
  if (order.size() != arch.nodes.size()) raise(errc::shape_error, "graph has a cycle");
  return order;
}

}  // namespace detail

struct NodeShape {
  std::string id;
  TensorShape shape;
};

/// Validates the graph and computes every node's output shape. Throws
/// ShapeError on inconsistent wiring, channel mismatches or collapsed
/// spatial extents.
inline std::vector<NodeShape> infer_shapes(const ArchitectureConfig& arch) {
  if (arch.nodes.empty()) raise(errc::shape_error, "empty architecture");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < arch.nodes.size(); ++i) index[arch.nodes[i].id] = i;

  std::vector<std::vector<std::size_t>> inputs(arch.nodes.size());
  std::vector<std::size_t> fanout(arch.nodes.size(), 0);
  for (const auto& [from, to] : arch.edges) {
    inputs[index.at(to)].push_back(index.at(from));
    ++fanout[index.at(from)];
  }

  const auto order = detail::topological_order(arch);
  std::vector<TensorShape> shapes(arch.nodes.size());

  int sink_count = 0;
  for (std::size_t i = 0; i < arch.nodes.size(); ++i) {
    if (fanout[i] == 0) {
      ++sink_count;
      if (arch.nodes[i].kind != LayerKind::softmax)
        raise(errc::shape_error, "output node must be softmax, got " +
                                     std::string(layer_kind_name(arch.nodes[i].kind)) + " at " +
                                     arch.nodes[i].id);
    }
  }
  if (sink_count != 1)
    raise(errc::shape_error, "graph must have exactly one output node, found " +
                                 std::to_string(sink_count));

  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t ni = order[oi];
    const LayerSpec& n = arch.nodes[ni];
    TensorShape in;
    if (inputs[ni].empty()) {
      in = {arch.input_shape[0], arch.input_shape[1], arch.input_shape[2]};
    } else if (n.kind == LayerKind::add) {
      if (inputs[ni].size() != 2)
        raise(errc::shape_error, "add node " + n.id + " needs exactly 2 inputs");
      if (!(shapes[inputs[ni][0]] == shapes[inputs[ni][1]]))
        raise(errc::shape_error, "add node " + n.id + " has mismatched input shapes");
      in = shapes[inputs[ni][0]];
    } else {
      if (inputs[ni].size() != 1)
        raise(errc::shape_error, "node " + n.id + " needs exactly 1 input, has " +
                                     std::to_string(inputs[ni].size()));
      in = shapes[inputs[ni][0]];
    }

    TensorShape out = in;
    switch (n.kind) {
      case LayerKind::conv:
      case LayerKind::separable_conv: {
        if (n.kernel < 1 || n.stride < 1)
          raise(errc::shape_error, "bad kernel/stride at " + n.id);
        if (n.in_channels != in.c)
          raise(errc::shape_error, "channel mismatch at " + n.id + ": expects " +
                                       std::to_string(n.in_channels) + ", input has " +
                                       std::to_string(in.c));
        out.h = conv_out_extent(in.h, n.kernel, n.stride, n.padding);
        out.w = conv_out_extent(in.w, n.kernel, n.stride, n.padding);
        out.c = n.out_channels;
        if (out.h < 1 || out.w < 1 || out.c < 1)
          raise(errc::shape_error, "spatial extent collapsed at " + n.id);
        break;
      }
      case LayerKind::max_pool: {
        if (n.kernel < 1 || n.stride < 1)
          raise(errc::shape_error, "bad kernel/stride at " + n.id);
        out.h = conv_out_extent(in.h, n.kernel, n.stride, n.padding);
        out.w = conv_out_extent(in.w, n.kernel, n.stride, n.padding);
        if (out.h < 1 || out.w < 1)
          raise(errc::shape_error, "spatial extent collapsed at " + n.id);
        break;
      }
      case LayerKind::batch_norm: {
        if (n.in_channels != in.c)
          raise(errc::shape_error, "batch_norm channel mismatch at " + n.id);
        break;
      }
      case LayerKind::relu:
      case LayerKind::add:
      case LayerKind::softmax:
        break;
      case LayerKind::global_avg_pool: {
        out.h = 1;
        out.w = 1;
        break;
      }
      case LayerKind::fully_connected: {
        const std::int64_t flat = in.elements();
        if (n.in_channels != flat)
          raise(errc::shape_error, "fully_connected at " + n.id + " expects " +
                                       std::to_string(n.in_channels) + " inputs, flatten is " +
                                       std::to_string(flat));
        out = {1, 1, n.out_channels};
        break;
      }
    }
    shapes[ni] = out;
  }

  std::vector<NodeShape> result;
  result.reserve(order.size());
  for (std::size_t ni : order) result.push_back({arch.nodes[ni].id, shapes[ni]});
  return result;
}

/// Fluent builder for sequential segments with named taps for skip edges.
class GraphBuilder {
 public:
  explicit GraphBuilder(std::string name, std::array<int, 3> input_shape, int num_classes) {
    arch_.name = std::move(name);
    arch_.input_shape = input_shape;
    arch_.num_classes = num_classes;
  }

  /// Appends a node; connects it after `after` (default: previous node).
  GraphBuilder& node(LayerSpec spec, const std::string& after = "") {
    const std::string prev = after.empty() ? last_ : after;
    const std::string id = spec.id;
    arch_.nodes.push_back(std::move(spec));
    if (!prev.empty()) arch_.edges.emplace_back(prev, id);
    last_ = id;
    return *this;
  }

  GraphBuilder& edge(const std::string& from, const std::string& to) {
    arch_.edges.emplace_back(from, to);
    return *this;
  }

  const std::string& last() const { return last_; }
  GraphBuilder& set_last(const std::string& id) {
    last_ = id;
    return *this;
  }

  ArchitectureConfig build() { return std::move(arch_); }

 private:
  ArchitectureConfig arch_;
  std::string last_;
};

inline nlohmann::json arch_to_json(const ArchitectureConfig& arch) {
  nlohmann::json j;
  j["schema_version"] = kArchSchemaVersion;
  j["name"] = arch.name;
  j["input_shape"] = {arch.input_shape[0], arch.input_shape[1], arch.input_shape[2]};
  j["num_classes"] = arch.num_classes;
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : arch.nodes) {
    nlohmann::json p;
    p["id"] = n.id;
    p["kind"] = layer_kind_name(n.kind);
    nlohmann::json params;
    if (n.kind == LayerKind::conv || n.kind == LayerKind::separable_conv ||
        n.kind == LayerKind::max_pool) {
      params["kernel"] = n.kernel;
      params["stride"] = n.stride;
      params["padding"] = n.padding == Padding::same ? "same" : "valid";
    }
    if (n.kind == LayerKind::conv || n.kind == LayerKind::separable_conv ||
        n.kind == LayerKind::batch_norm || n.kind == LayerKind::fully_connected) {
      params["in_channels"] = n.in_channels;
      params["out_channels"] = n.out_channels;
    }
    if (n.kind == LayerKind::conv || n.kind == LayerKind::separable_conv ||
        n.kind == LayerKind::fully_connected)
      params["bias"] = n.bias;
    p["params"] = params;
    nodes.push_back(p);
  }
  j["nodes"] = nodes;
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [from, to] : arch.edges) edges.push_back({from, to});
  j["edges"] = edges;
  return j;
}

inline ArchitectureConfig arch_from_json(const nlohmann::json& j) {
  ArchitectureConfig arch;
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kArchSchemaVersion)
    raise(errc::parse_error, "unsupported architecture schema version");
  arch.name = j.at("name").get<std::string>();
  const auto& shape = j.at("input_shape");
  arch.input_shape = {shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>()};
  arch.num_classes = j.at("num_classes").get<int>();
  for (const auto& nj : j.at("nodes")) {
    LayerSpec n;
    n.id = nj.at("id").get<std::string>();
    n.kind = parse_layer_kind(nj.at("kind").get<std::string>());
    const auto& params = nj.at("params");
    if (params.contains("kernel")) n.kernel = params["kernel"].get<int>();
    if (params.contains("stride")) n.stride = params["stride"].get<int>();
    if (params.contains("padding"))
      n.padding = params["padding"].get<std::string>() == "valid" ? Padding::valid : Padding::same;
    if (params.contains("in_channels")) n.in_channels = params["in_channels"].get<int>();
    if (params.contains("out_channels")) n.out_channels = params["out_channels"].get<int>();
    if (params.contains("bias")) n.bias = params["bias"].get<bool>();
    arch.nodes.push_back(std::move(n));
  }
  for (const auto& ej : j.at("edges"))
    arch.edges.emplace_back(ej.at(0).get<std::string>(), ej.at(1).get<std::string>());
  return arch;
}

inline void save_arch(const ArchitectureConfig& arch, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(errc::write_error, "cannot write architecture: " + path.string());
  out << arch_to_json(arch).dump(2) << "\n";
}

inline ArchitectureConfig load_arch(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, "cannot read architecture: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, "bad architecture JSON: " + std::string(e.what()));
  }
  return arch_from_json(j);
}

}  // namespace veinorigin
