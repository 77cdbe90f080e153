// SPDX-License-Identifier: Apache-2.0
#include "radloc/nn/model.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

namespace radloc::nn {

CnnModel::CnnModel(Shape input_shape, std::size_t output_dim)
    : input_shape_(std::move(input_shape)), output_dim_(output_dim) {
  require(!input_shape_.empty() && shape_size(input_shape_) > 0, "model input shape is empty");
  require(output_dim_ > 0, "model output dimension must be positive");
}

CnnModel::CnnModel(const CnnModel& other)
    : input_shape_(other.input_shape_), output_dim_(other.output_dim_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

CnnModel& CnnModel::operator=(const CnnModel& other) {
  if (this != &other) {
    CnnModel tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

Shape CnnModel::current_output_shape() const {
  Shape s = input_shape_;
  for (const auto& l : layers_) s = l->output_shape(s);
  return s;
}

void CnnModel::add(std::unique_ptr<Layer> layer) {
  require(layer != nullptr, "null layer");
  layer->output_shape(current_output_shape());
  layers_.push_back(std::move(layer));
}

Tensor CnnModel::forward(const Tensor& batch, Mode mode) {
  require(!layers_.empty(), "model has no layers");
  if (batch.shape.size() != input_shape_.size() + 1 ||
      !std::equal(input_shape_.begin(), input_shape_.end(), batch.shape.begin() + 1)) {
    fail(ErrorCode::kInvalidArgument, "batch shape " + shape_string(batch.shape) +
                                          " does not match model input " +
                                          shape_string(input_shape_));
  }
  require(batch.shape[0] > 0, "empty batch");
  Tensor x = layers_.front()->forward(batch, mode);
  x.check_finite(layer_name(layers_.front()->kind()));
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    x = layers_[i]->forward(x, mode);
    x.check_finite(layer_name(layers_[i]->kind()));
  }
  pending_backward_ = (mode == Mode::kTrain);
  return x;
}

void CnnModel::backward(const Tensor& grad_out) {
  if (!pending_backward_) fail(ErrorCode::kState, "backward without forward");
  pending_backward_ = false;
  Tensor g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    // The first layer never needs an input gradient.
    g = layers_[i]->backward(g, i > 0);
  }
  for (Tensor* p : trainable_parameters()) {
    if (p->has_grad()) p->check_finite("gradient");
  }
}

void CnnModel::zero_grad() {
  for (auto& l : layers_) {
    for (Tensor* p : l->parameters()) {
      if (l->frozen()) {
        p->drop_grad();
      } else {
        p->zero_grad();
      }
    }
  }
}

std::vector<Tensor*> CnnModel::trainable_parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    if (l->frozen()) continue;
    for (Tensor* p : l->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<Tensor*> CnnModel::all_tensors() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    for (Tensor* p : l->parameters()) out.push_back(p);
    for (Tensor* p : l->state()) out.push_back(p);
  }
  return out;
}

std::size_t CnnModel::count_trainable() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    if (l->frozen()) continue;
    for (const Tensor* p : l->parameters()) n += p->size();
  }
  return n;
}

std::size_t CnnModel::count_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    for (const Tensor* p : l->parameters()) n += p->size();
  }
  return n;
}

void CnnModel::freeze_feature_layers() {
  for (auto& l : layers_) {
    if (l->kind() == LayerKind::kConv || l->kind() == LayerKind::kBatchNorm) {
      l->set_frozen(true);
      for (Tensor* p : l->parameters()) p->drop_grad();
    }
  }
}

// ---------------------------------------------------------------- architectures

std::size_t flattened_features(const ArchitectureSpec& spec) {
  require(spec.input_shape.size() == 4, "architecture input must be (channels, range, az, vel)");
  Shape s = spec.input_shape;
  for (int stage = 0; stage < 2; ++stage) {
    const std::size_t k_az = spec.k_az, k_vel = spec.k_vel;
    if (s[2] < k_az || s[3] < k_vel) fail(ErrorCode::kInvalidArgument, "grid too small for the CNN");
    s[2] -= k_az - 1;
    s[3] -= k_vel - 1;
    if (s[2] < spec.p_az || s[3] < spec.p_vel) {
      fail(ErrorCode::kInvalidArgument, "grid too small for the CNN");
    }
    s[2] /= spec.p_az;
    s[3] /= spec.p_vel;
    s[0] = stage == 0 ? spec.maps1 : spec.maps2;
  }
  return shape_size(s);
}

std::size_t analytic_dense_count(const ArchitectureSpec& spec) {
  const std::size_t f = flattened_features(spec);
  return f * spec.hidden + spec.hidden + spec.hidden * spec.output_dim + spec.output_dim;
}

std::size_t analytic_parameter_count(const ArchitectureSpec& spec) {
  const std::size_t k = spec.k_az * spec.k_vel;
  const std::size_t c_in = spec.input_shape.at(0);
  const std::size_t conv = k * c_in * spec.maps1 + spec.maps1 + k * spec.maps1 * spec.maps2 + spec.maps2;
  const std::size_t bn = 2 * spec.maps1 + 2 * spec.maps2;
  return conv + bn + analytic_dense_count(spec);
}

std::size_t select_hidden_width(ArchitectureSpec spec, std::size_t target_total) {
  std::size_t best = 1;
  std::size_t best_gap = std::numeric_limits<std::size_t>::max();
  for (std::size_t h = 1; h <= 4096; ++h) {
    spec.hidden = h;
    const std::size_t total = analytic_parameter_count(spec);
    const std::size_t gap = total > target_total ? total - target_total : target_total - total;
    if (gap < best_gap) {
      best_gap = gap;
      best = h;
    }
    if (total > target_total) break;
  }
  return best;
}

Shape input_shape_for(const namf::HeatmapGrid& grid) {
  return {1, static_cast<std::size_t>(grid.kappa), static_cast<std::size_t>(grid.n_azimuth),
          static_cast<std::size_t>(grid.n_velocity())};
}

ArchitectureSpec baseline_architecture(const namf::HeatmapGrid& grid) {
  require(!grid.doppler(), "baseline network expects a range-azimuth grid");
  ArchitectureSpec spec;
  spec.input_shape = input_shape_for(grid);
  spec.output_dim = 2;
  spec.hidden = select_hidden_width(spec, kBaselineTargetParameters);
  return spec;
}

ArchitectureSpec doppler_architecture(const namf::HeatmapGrid& grid) {
  require(grid.doppler(), "Doppler network expects a range-azimuth-velocity grid");
  ArchitectureSpec spec;
  spec.input_shape = input_shape_for(grid);
  spec.k_vel = 3;
  spec.p_vel = 2;
  spec.output_dim = 3;
  spec.hidden = select_hidden_width(spec, kDopplerTargetParameters);
  return spec;
}

CnnModel build_cnn(const ArchitectureSpec& spec, std::uint64_t seed) {
  const std::size_t flat = flattened_features(spec);
  Rng rng(seed);
  CnnModel m(spec.input_shape, spec.output_dim);
  const std::size_t k = spec.k_az * spec.k_vel;

  auto conv = [&](std::size_t in, std::size_t out) {
    auto c = std::make_unique<Conv>(in, out, spec.k_az, spec.k_vel);
    glorot_uniform(c->weight, in * k, out * k, rng);
    return c;
  };
  auto dense = [&](std::size_t in, std::size_t out) {
    auto d = std::make_unique<Dense>(in, out);
    glorot_uniform(d->weight, in, out, rng);
    return d;
  };

  m.add(conv(spec.input_shape[0], spec.maps1));
  m.add(std::make_unique<Relu>());
  m.add(std::make_unique<BatchNorm>(spec.maps1));
  m.add(std::make_unique<MaxPool>(spec.p_az, spec.p_vel));
  m.add(conv(spec.maps1, spec.maps2));
  m.add(std::make_unique<Relu>());
  m.add(std::make_unique<BatchNorm>(spec.maps2));
  m.add(std::make_unique<MaxPool>(spec.p_az, spec.p_vel));
  m.add(std::make_unique<Flatten>());
  m.add(dense(flat, spec.hidden));
  m.add(std::make_unique<Relu>());
  m.add(dense(spec.hidden, spec.output_dim));
  return m;
}

CnnModel build_baseline_cnn(const namf::HeatmapGrid& grid, std::uint64_t seed) {
  return build_cnn(baseline_architecture(grid), seed);
}

CnnModel build_doppler_cnn(const namf::HeatmapGrid& grid, std::uint64_t seed) {
  return build_cnn(doppler_architecture(grid), seed);
}

}  // namespace radloc::nn
