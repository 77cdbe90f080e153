// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "radloc/nn/tensor.hpp"

namespace radloc::nn {

struct LossResult {
  double value = 0.0;
  Tensor grad;  // d value / d pred, same shape as pred
};

/// Mean Euclidean distance (1/B) sum_b ||pred_b - truth_b||. The subgradient
/// at pred_b == truth_b is zero.
LossResult euclidean_loss(const Tensor& pred, const Tensor& truth);

struct AdamConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moments for a fixed list of parameter tensors.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// One update of every tensor in `params` from its `grad`; the L2 term
  /// weight_decay * w is added to the gradient before the moments.
  /// `step_index` starts at 1. Tensors without a gradient are skipped.
  void step(const std::vector<Tensor*>& params, std::uint64_t step_index);

  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace radloc::nn
