#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "veinorigin/error.hpp"
#include "veinorigin/network.hpp"
#include "veinorigin/zoo.hpp"

namespace veinorigin {

enum class OptKind { adam, sgd };

struct OptimizerConfig {
  OptKind kind = OptKind::adam;
  double learning_rate = 1e-3;
  double momentum = 0.9;     // sgd only
  double beta1 = 0.9;        // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline const char* optimizer_name(OptKind k) { return k == OptKind::adam ? "adam" : "sgd"; }

/// Adam for every architecture except Bondi and Marra, which train with SGD.
inline OptimizerConfig select_optimizer(const std::string& arch_name) {
  bool known = false;
  for (const auto& n : architecture_names()) known |= (n == arch_name);
  if (!known) raise(errc::unknown_architecture, "unknown architecture: " + arch_name);
  OptimizerConfig cfg;
  if (arch_name == "bondi" || arch_name == "marra") {
    cfg.kind = OptKind::sgd;
    cfg.learning_rate = 1e-2;
    cfg.momentum = 0.9;
  } else {
    cfg.kind = OptKind::adam;
    cfg.learning_rate = 1e-3;
  }
  return cfg;
}

template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, std::vector<ParamBlob<T>*> params)
      : cfg_(cfg), params_(std::move(params)) {
    if (cfg_.kind == OptKind::adam) {
      m_.resize(params_.size());
      v_.resize(params_.size());
      for (std::size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(params_[i]->value.size(), T(0));
        v_[i].assign(params_[i]->value.size(), T(0));
      }
    } else {
      vel_.resize(params_.size());
      for (std::size_t i = 0; i < params_.size(); ++i)
        vel_[i].assign(params_[i]->value.size(), T(0));
    }
  }

  void step() {
    if (cfg_.kind == OptKind::adam) {
      ++t_;
      const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
      const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
      for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = *params_[i];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
          const double g = static_cast<double>(p.grad[j]);
          m_[i][j] = static_cast<T>(cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g);
          v_[i][j] = static_cast<T>(cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g);
          const double mhat = m_[i][j] / bc1;
          const double vhat = v_[i][j] / bc2;
          p.value[j] -= static_cast<T>(cfg_.learning_rate * mhat /
                                       (std::sqrt(vhat) + cfg_.epsilon));
        }
      }
    } else {
      for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = *params_[i];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
          vel_[i][j] = static_cast<T>(cfg_.momentum * vel_[i][j] -
                                      cfg_.learning_rate * p.grad[j]);
          p.value[j] += vel_[i][j];
        }
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  std::vector<ParamBlob<T>*> params_;
  std::vector<std::vector<T>> m_, v_, vel_;
  long t_ = 0;
};

}  // namespace veinorigin
