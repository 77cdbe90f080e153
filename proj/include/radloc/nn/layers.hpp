// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "radloc/common.hpp"
#include "radloc/nn/tensor.hpp"

namespace radloc::nn {

enum class Mode { kTrain, kInfer };

enum class LayerKind : std::uint8_t {
  kConv = 1,
  kBatchNorm = 2,
  kRelu = 3,
  kMaxPool = 4,
  kFlatten = 5,
  kDense = 6,
};

const char* layer_name(LayerKind kind);

/// One differentiable stage. Tensors carry the batch as their leading
/// dimension; spatial activations are laid out (batch, channel, range,
/// azimuth, velocity).
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;
  /// Per-sample output shape for a per-sample input shape.
  virtual Shape output_shape(const Shape& in) const = 0;
  /// Train mode caches what backward needs.
  virtual Tensor forward(const Tensor& in, Mode mode) = 0;
  /// Accumulates parameter gradients (unless frozen) and returns the input
  /// gradient; when `need_input_grad` is false the returned tensor is empty.
  virtual Tensor backward(const Tensor& grad_out, bool need_input_grad) = 0;

  /// Learnable tensors (weights, biases, affine terms).
  virtual std::vector<Tensor*> parameters() { return {}; }
  /// Non-learned persistent state (batch-norm running statistics).
  virtual std::vector<Tensor*> state() { return {}; }
  /// Integer hyperparameters needed to rebuild the layer from a checkpoint.
  virtual std::vector<std::int64_t> attributes() const { return {}; }

  bool frozen() const { return frozen_; }
  void set_frozen(bool f) { frozen_ = f; }

 private:
  bool frozen_ = false;
};

/// Valid convolution over the azimuth and velocity axes with a range extent
/// of one: kernel 1 x k_az x k_vel, stride 1.
class Conv final : public Layer {
 public:
  Conv(std::size_t in_channels, std::size_t out_channels, std::size_t k_az, std::size_t k_vel);

  LayerKind kind() const override { return LayerKind::kConv; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv>(*this); }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, Mode mode) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::vector<Tensor*> parameters() override { return {&weight, &bias}; }
  std::vector<std::int64_t> attributes() const override;

  Tensor weight;  // out x in x k_az x k_vel
  Tensor bias;    // out

 private:
  std::size_t in_, out_, k_az_, k_vel_;
  Tensor input_;
};

/// Per-channel batch normalization with running statistics (momentum 0.1).
/// When frozen, running statistics are used in both modes and never change.
class BatchNorm final : public Layer {
 public:
  explicit BatchNorm(std::size_t channels, double momentum = 0.1, double eps = 1e-5);

  LayerKind kind() const override { return LayerKind::kBatchNorm; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& in, Mode mode) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::vector<Tensor*> parameters() override { return {&gamma, &beta}; }
  std::vector<Tensor*> state() override { return {&running_mean, &running_var}; }
  std::vector<std::int64_t> attributes() const override;

  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;  // unbiased batch variance is accumulated

  double momentum() const { return momentum_; }
  double eps() const { return eps_; }

 private:
  std::size_t channels_;
  double momentum_;
  double eps_;
  // backward cache
  bool used_batch_stats_ = false;
  std::vector<double> xhat_;
  std::vector<double> inv_std_;
  Shape in_shape_;
};

class Relu final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::kRelu; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& in, Mode mode) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;

 private:
  std::vector<unsigned char> mask_;
  Shape in_shape_;
};

/// Non-overlapping max pooling over azimuth and velocity; trailing
/// remainders are dropped. Backward routes gradient to the first maximum.
class MaxPool final : public Layer {
 public:
  MaxPool(std::size_t p_az, std::size_t p_vel);

  LayerKind kind() const override { return LayerKind::kMaxPool; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool>(*this); }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, Mode mode) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::vector<std::int64_t> attributes() const override;

 private:
  std::size_t p_az_, p_vel_;
  std::vector<std::size_t> argmax_;
  Shape in_shape_;
};

class Flatten final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::kFlatten; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }
  Shape output_shape(const Shape& in) const override { return {shape_size(in)}; }
  Tensor forward(const Tensor& in, Mode mode) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;

 private:
  Shape in_shape_;
};

/// Fully-connected layer y = W x + b.
class Dense final : public Layer {
 public:
  Dense(std::size_t in_features, std::size_t out_features);

  LayerKind kind() const override { return LayerKind::kDense; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, Mode mode) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::vector<Tensor*> parameters() override { return {&weight, &bias}; }
  std::vector<std::int64_t> attributes() const override;

  Tensor weight;  // out x in
  Tensor bias;    // out

 private:
  std::size_t in_, out_;
  Tensor input_;
};

/// Glorot-uniform initialization of a weight tensor, U(+-sqrt(6/(fan_in+fan_out))).
void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace radloc::nn
