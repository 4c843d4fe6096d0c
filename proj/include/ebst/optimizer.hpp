#pragma once

#include <stdexcept>

#include "ebst/mlp.hpp"

namespace ebst {

struct SgdConfig {
  double learning_rate = 1e-2;
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

// SGD with momentum and decoupled-from-nothing weight decay, i.e. the update
//   v <- momentum*v + grad + weight_decay*param
//   param <- param - lr*v
class SgdOptimizer {
 public:
  SgdOptimizer(const MlpParams& params, SgdConfig cfg)
      : cfg_(cfg), velocity_(Gradients::zeros_like(params)) {
    if (cfg.learning_rate < 0.0)
      throw std::invalid_argument("sgd: negative learning rate");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
      throw std::invalid_argument("sgd: momentum must be in [0, 1)");
    if (cfg.weight_decay < 0.0)
      throw std::invalid_argument("sgd: negative weight decay");
  }

  const SgdConfig& config() const { return cfg_; }

  void step(MlpParams& params, const Gradients& grads) {
    if (!grads.all_finite())
      throw std::runtime_error("sgd: update rejected, non-finite gradient");
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      auto w = params.weights[l].data();
      auto g = grads.weights[l].data();
      auto v = velocity_.weights[l].data();
      for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = cfg_.momentum * v[i] + g[i] + cfg_.weight_decay * w[i];
        w[i] -= cfg_.learning_rate * v[i];
      }
      auto& b = params.biases[l];
      const auto& gb = grads.biases[l];
      auto& vb = velocity_.biases[l];
      for (std::size_t i = 0; i < b.size(); ++i) {
        vb[i] = cfg_.momentum * vb[i] + gb[i] + cfg_.weight_decay * b[i];
        b[i] -= cfg_.learning_rate * vb[i];
      }
    }
    if (!params.all_finite())
      throw std::runtime_error("sgd: parameters became non-finite");
  }

 private:
  SgdConfig cfg_;
  Gradients velocity_;
};

}  // namespace ebst
