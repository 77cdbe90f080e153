// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "radloc/namf.hpp"
#include "radloc/nn/layers.hpp"
#include "radloc/nn/tensor.hpp"

namespace radloc::nn {

/// Sequential regression network. Copies are deep.
class CnnModel {
 public:
  CnnModel() = default;
  /// `input_shape` is per sample: (channels, range, azimuth, velocity).
  CnnModel(Shape input_shape, std::size_t output_dim);

  CnnModel(const CnnModel& other);
  CnnModel& operator=(const CnnModel& other);
  CnnModel(CnnModel&&) noexcept = default;
  CnnModel& operator=(CnnModel&&) noexcept = default;

  /// Appends a layer; its input must match the current output shape.
  void add(std::unique_ptr<Layer> layer);

  /// `batch` has shape (B, input_shape...). Train mode caches activations
  /// for one subsequent backward call.
  Tensor forward(const Tensor& batch, Mode mode);
  /// Backpropagates `grad_out` (B x output_dim); parameter gradients are
  /// accumulated into unfrozen tensors.
  void backward(const Tensor& grad_out);

  void zero_grad();
  /// Unfrozen parameter tensors in layer order.
  std::vector<Tensor*> trainable_parameters();
  /// Every parameter and state tensor, frozen or not, in layer order.
  std::vector<Tensor*> all_tensors();

  std::size_t count_trainable() const;
  /// Parameters of all layers regardless of freeze state (running
  /// statistics excluded).
  std::size_t count_parameters() const;

  /// Freezes every conv and batch-norm layer.
  void freeze_feature_layers();

  const Shape& input_shape() const { return input_shape_; }
  std::size_t output_dim() const { return output_dim_; }
  std::size_t num_layers() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  Shape current_output_shape() const;

 private:
  Shape input_shape_;
  std::size_t output_dim_ = 0;
  std::vector<std::unique_ptr<Layer>> layers_;
  bool pending_backward_ = false;
};

/// Two conv/relu/batch-norm/pool stages followed by two dense layers.
struct ArchitectureSpec {
  Shape input_shape;          // (1, range, azimuth, velocity)
  std::size_t k_az = 3, k_vel = 1;
  std::size_t p_az = 2, p_vel = 1;
  std::size_t maps1 = 32, maps2 = 64;
  std::size_t hidden = 4;
  std::size_t output_dim = 2;
};

/// Width of the flattened feature vector; throws when the grid is too small
/// for the feature stack.
std::size_t flattened_features(const ArchitectureSpec& spec);

/// Closed-form parameter count of `spec` (running statistics excluded).
std::size_t analytic_parameter_count(const ArchitectureSpec& spec);
/// Closed-form parameter count of the dense head only.
std::size_t analytic_dense_count(const ArchitectureSpec& spec);

/// Hidden width minimizing |analytic_parameter_count - target|; smallest
/// width wins ties.
std::size_t select_hidden_width(ArchitectureSpec spec, std::size_t target_total);

inline constexpr std::size_t kBaselineTargetParameters = 13374;
inline constexpr std::size_t kDopplerTargetParameters = 143299;

/// Per-sample network input shape for a heatmap grid.
Shape input_shape_for(const namf::HeatmapGrid& grid);

ArchitectureSpec baseline_architecture(const namf::HeatmapGrid& grid);
ArchitectureSpec doppler_architecture(const namf::HeatmapGrid& grid);

/// Builds and Glorot-initializes the network (zero biases, unit BN scale).
CnnModel build_cnn(const ArchitectureSpec& spec, std::uint64_t seed);
CnnModel build_baseline_cnn(const namf::HeatmapGrid& grid, std::uint64_t seed);
CnnModel build_doppler_cnn(const namf::HeatmapGrid& grid, std::uint64_t seed);

}  // namespace radloc::nn
