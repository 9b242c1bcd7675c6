#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "veinorigin/error.hpp"
#include "veinorigin/network.hpp"
#include "veinorigin/optimizer.hpp"
#include "veinorigin/patchset.hpp"
#include "veinorigin/rng.hpp"

namespace veinorigin {

struct TrainConfig {
  int batch_size = 64;
  int max_epochs = 100;
  std::string optimizer = "auto";  // auto | adam | sgd
  double learning_rate = -1.0;     // < 0: optimizer default
  double momentum = 0.9;
  int early_stop_patience = 15;
  std::uint64_t seed = 0;
  // One seeded permutation reused every epoch keeps runs reproducible and
  // makes fixed-weight losses exactly repeatable; opt in to per-epoch
  // reshuffling if wanted.
  bool reshuffle_each_epoch = false;
  // Stop once epoch training accuracy reaches this level (0 disables).
  double stop_at_train_accuracy = 0.0;
};

inline OptimizerConfig resolve_optimizer(const TrainConfig& cfg, const std::string& arch_name) {
  OptimizerConfig opt;
  if (cfg.optimizer == "auto") {
    opt = select_optimizer(arch_name);
  } else if (cfg.optimizer == "adam") {
    opt.kind = OptKind::adam;
    opt.learning_rate = 1e-3;
  } else if (cfg.optimizer == "sgd") {
    opt.kind = OptKind::sgd;
    opt.learning_rate = 1e-2;
  } else {
    raise(errc::invalid_argument, "unknown optimizer: " + cfg.optimizer);
  }
  if (cfg.learning_rate >= 0.0) opt.learning_rate = cfg.learning_rate;
  opt.momentum = cfg.momentum;
  return opt;
}

/// key=value config file; '#' starts a comment. Unknown keys are rejected.
inline TrainConfig parse_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, "cannot read config: " + path.string());
  TrainConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = true;
      for (char ch : line) blank &= std::isspace(static_cast<unsigned char>(ch)) != 0;
      if (blank) continue;
      raise(errc::parse_error, "bad config line " + std::to_string(lineno));
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "config_version") {
        if (std::stoi(val) != 1) raise(errc::parse_error, "unsupported config_version " + val);
      }
      else if (key == "batch_size") cfg.batch_size = std::stoi(val);
      else if (key == "max_epochs") cfg.max_epochs = std::stoi(val);
      else if (key == "optimizer") cfg.optimizer = val;
      else if (key == "learning_rate") cfg.learning_rate = std::stod(val);
      else if (key == "momentum") cfg.momentum = std::stod(val);
      else if (key == "early_stop_patience") cfg.early_stop_patience = std::stoi(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "reshuffle_each_epoch") cfg.reshuffle_each_epoch = (val == "true" || val == "1");
      else if (key == "stop_at_train_accuracy") cfg.stop_at_train_accuracy = std::stod(val);
      else raise(errc::parse_error, "unknown config key: " + key);
    } catch (const std::invalid_argument&) {
      raise(errc::parse_error, "bad value for " + key + ": " + val);
    }
  }
  if (cfg.batch_size < 1) raise(errc::invalid_argument, "batch_size must be >= 1");
  return cfg;
}

inline std::string format_train_config(const TrainConfig& cfg, const OptimizerConfig& opt) {
  std::ostringstream os;
  os << "config_version=1\n"
     << "batch_size=" << cfg.batch_size << "\n"
     << "max_epochs=" << cfg.max_epochs << "\n"
     << "optimizer=" << optimizer_name(opt.kind) << "\n"
     << "learning_rate=" << opt.learning_rate << "\n"
     << "momentum=" << opt.momentum << "\n"
     << "early_stop_patience=" << cfg.early_stop_patience << "\n"
     << "seed=" << cfg.seed << "\n"
     << "reshuffle_each_epoch=" << (cfg.reshuffle_each_epoch ? "true" : "false") << "\n";
  return os.str();
}

struct EpochStats {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainingRun {
  std::vector<EpochStats> history;
  int best_epoch = -1;  // index of minimum validation loss
};

namespace detail {

template <typename T>
Tensor<T> gather_batch(const LabeledPatches<T>& set, const std::vector<std::size_t>& order,
                       std::size_t begin, std::size_t end, std::vector<int>& labels) {
  const int ps_h = set.x.h, ps_w = set.x.w;
  Tensor<T> batch(static_cast<int>(end - begin), ps_h, ps_w, 1);
  labels.clear();
  const std::size_t stride = static_cast<std::size_t>(ps_h) * ps_w;
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t src = order[i];
    std::copy_n(set.x.data.data() + src * stride, stride,
                batch.data.data() + (i - begin) * stride);
    labels.push_back(set.labels[src]);
  }
  return batch;
}

template <typename T>
StepStats evaluate_set(Network<T>& net, const LabeledPatches<T>& set, int batch_size) {
  StepStats total;
  if (set.count() == 0) return total;
  std::vector<std::size_t> order(set.count());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> labels;
  for (std::size_t b = 0; b < order.size(); b += batch_size) {
    const std::size_t e = std::min(order.size(), b + batch_size);
    Tensor<T> batch = gather_batch(set, order, b, e, labels);
    const StepStats s = net.evaluate_batch(batch, labels);
    total.loss += s.loss * static_cast<double>(e - b);
    total.accuracy += s.accuracy * static_cast<double>(e - b);
  }
  total.loss /= set.count();
  total.accuracy /= set.count();
  return total;
}

}  // namespace detail

/// Mini-batch training with early stopping on validation loss; the weights
/// of the best epoch are left in the network. When the validation set is
/// empty, training metrics stand in for validation metrics.
template <typename T>
TrainingRun train(Network<T>& net, const LabeledPatches<T>& train_set,
                  const LabeledPatches<T>& val_set, const TrainConfig& cfg,
                  const OptimizerConfig& opt_cfg) {
  if (cfg.max_epochs > 0 && train_set.count() == 0)
    raise(errc::too_few_samples, "empty training split");
  if (cfg.batch_size < 1) raise(errc::invalid_argument, "batch_size must be >= 1");

  Optimizer<T> opt(opt_cfg, net.trainable_params());
  TrainingRun run;
  if (cfg.max_epochs == 0) return run;

  std::vector<std::size_t> order(train_set.count());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(cfg.seed, 0x0baff1eu));
  shuffle_rng.shuffle(order);

  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<std::vector<T>> best_weights;

  auto snapshot = [&]() {
    best_weights.clear();
    for (const auto& p : net.all_params()) best_weights.push_back(p.value);
  };
  auto restore = [&]() {
    if (best_weights.empty()) return;
    auto& blobs = net.all_params();
    for (std::size_t i = 0; i < blobs.size(); ++i) blobs[i].value = best_weights[i];
  };

  std::vector<int> labels;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (cfg.reshuffle_each_epoch) {
      Rng epoch_rng(derive_seed(cfg.seed, 0xe90c0000u + epoch));
      epoch_rng.shuffle(order);
    }
    EpochStats es;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      Tensor<T> batch = detail::gather_batch(train_set, order, b, e, labels);
      const StepStats s = net.train_step(batch, labels);
      if (!std::isfinite(s.loss))
        raise(errc::divergence, "non-finite loss at epoch " + std::to_string(epoch));
      opt.step();
      es.train_loss += s.loss * static_cast<double>(e - b);
      es.train_acc += s.accuracy * static_cast<double>(e - b);
    }
    es.train_loss /= train_set.count();
    es.train_acc /= train_set.count();

    if (val_set.count() > 0) {
      const StepStats vs = detail::evaluate_set(net, val_set, cfg.batch_size);
      if (!std::isfinite(vs.loss))
        raise(errc::divergence, "non-finite validation loss at epoch " + std::to_string(epoch));
      es.val_loss = vs.loss;
      es.val_acc = vs.accuracy;
    } else {
      es.val_loss = es.train_loss;
      es.val_acc = es.train_acc;
    }
    run.history.push_back(es);

    if (es.val_loss < best_val) {
      best_val = es.val_loss;
      run.best_epoch = epoch;
      since_best = 0;
      snapshot();
    } else {
      ++since_best;
      if (cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience) break;
    }
    if (cfg.stop_at_train_accuracy > 0.0 && es.train_acc >= cfg.stop_at_train_accuracy) {
      // Keep the final weights: the memorization target is the point here.
      run.best_epoch = epoch;
      snapshot();
      break;
    }
  }
  restore();
  return run;
}

inline void write_history_csv(const TrainingRun& run, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(errc::write_error, "cannot write history: " + path.string());
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  char buf[160];
  for (std::size_t e = 0; e < run.history.size(); ++e) {
    const auto& h = run.history[e];
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g\n", e, h.train_loss, h.train_acc,
                  h.val_loss, h.val_acc);
    out << buf;
  }
}

}  // namespace veinorigin
