// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "radloc/estimators.hpp"
#include "radloc/namf.hpp"
#include "radloc/nn/model.hpp"
#include "radloc/nn/optim.hpp"

namespace radloc::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  std::size_t early_stop_patience = 10;

  void validate() const;
  AdamConfig adam() const {
    return {learning_rate, weight_decay, adam_beta1, adam_beta2, adam_eps};
  }
};

/// Affine map between physical labels and [0, 1] per coordinate. Range
/// spans the outer bin edges; azimuth and velocity span the grid samples.
class LabelNormalizer {
 public:
  explicit LabelNormalizer(const namf::HeatmapGrid& grid);

  std::size_t dim() const { return lo_.size(); }
  std::vector<double> normalize(const namf::Label& label) const;
  /// Clamps every coordinate to [0, 1] before mapping back.
  namf::Label denormalize(std::span<const double> normalized) const;

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;  // empty when no validation set was given
  std::size_t best_epoch = 0;
  double best_loss = 0.0;
};

using EpochCallback = std::function<void(std::size_t epoch, double train_loss, double val_loss)>;

/// Stacks samples into a (B, input_shape...) batch.
Tensor make_batch(std::span<const namf::HeatmapSample> samples,
                  std::span<const std::size_t> indices, const Shape& input_shape);

/// Mean Euclidean loss in normalized label space, inference mode.
double evaluate_loss(CnnModel& model, std::span<const namf::HeatmapSample> samples,
                     const LabelNormalizer& norm);

/// Mini-batch Adam on the normalized Euclidean loss with per-epoch shuffles
/// drawn from config.seed. Selection and early stopping follow the
/// validation loss, or the epoch training loss when `val` is empty. On
/// return `model` holds the selected snapshot.
TrainHistory train(CnnModel& model, std::span<const namf::HeatmapSample> train_set,
                   std::span<const namf::HeatmapSample> val,
                   const namf::HeatmapGrid& grid, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

estimators::Estimate predict_denormalized(CnnModel& model, const namf::HeatmapSample& sample,
                                          const namf::HeatmapGrid& grid);
std::vector<estimators::Estimate> predict_denormalized(
    CnnModel& model, std::span<const namf::HeatmapSample> samples, const namf::HeatmapGrid& grid);

}  // namespace radloc::nn
