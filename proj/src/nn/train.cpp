// SPDX-License-Identifier: Apache-2.0
#include "radloc/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace radloc::nn {

namespace {
constexpr std::size_t kInferChunk = 256;
}

void TrainConfig::validate() const {
  require(learning_rate > 0 && weight_decay >= 0 && adam_eps > 0, "invalid optimizer settings");
  require(adam_beta1 > 0 && adam_beta1 < 1 && adam_beta2 > 0 && adam_beta2 < 1,
          "Adam betas must lie in (0, 1)");
  require(batch_size > 0 && epochs > 0 && early_stop_patience > 0,
          "batch size, epochs and patience must be positive");
}

LabelNormalizer::LabelNormalizer(const namf::HeatmapGrid& grid) {
  lo_ = {grid.range_lo_m(), grid.theta_min_deg};
  hi_ = {grid.range_hi_m(), grid.theta_max_deg()};
  if (grid.doppler()) {
    lo_.push_back(grid.velocity->v_min_mps);
    hi_.push_back(grid.v_max_mps());
  }
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    require(hi_[i] > lo_[i], "label normalization needs a non-degenerate grid");
  }
}

std::vector<double> LabelNormalizer::normalize(const namf::Label& label) const {
  std::vector<double> raw{label.range_m, label.azimuth_deg};
  if (dim() == 3) {
    require(label.velocity_mps.has_value(), "label lacks a velocity");
    raw.push_back(*label.velocity_mps);
  }
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = (raw[i] - lo_[i]) / (hi_[i] - lo_[i]);
  return raw;
}

namf::Label LabelNormalizer::denormalize(std::span<const double> normalized) const {
  require(normalized.size() == dim(), "prediction has the wrong dimension");
  std::vector<double> v(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    v[i] = lo_[i] + std::clamp(normalized[i], 0.0, 1.0) * (hi_[i] - lo_[i]);
  }
  namf::Label out;
  out.range_m = v[0];
  out.azimuth_deg = v[1];
  if (dim() == 3) out.velocity_mps = v[2];
  return out;
}

Tensor make_batch(std::span<const namf::HeatmapSample> samples,
                  std::span<const std::size_t> indices, const Shape& input_shape) {
  const std::size_t per = shape_size(input_shape);
  Shape s{indices.size()};
  s.insert(s.end(), input_shape.begin(), input_shape.end());
  Tensor t(s);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& smp = samples[indices[b]];
    if (smp.values.size() != per) {
      fail(ErrorCode::kInvalidArgument, "sample tensor size does not match the model input");
    }
    std::copy(smp.values.begin(), smp.values.end(), t.values.begin() + b * per);
  }
  return t;
}

namespace {

Tensor make_targets(std::span<const namf::HeatmapSample> samples,
                    std::span<const std::size_t> indices, const LabelNormalizer& norm) {
  Tensor t({indices.size(), norm.dim()});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto y = norm.normalize(samples[indices[b]].label);
    std::copy(y.begin(), y.end(), t.values.begin() + b * norm.dim());
  }
  return t;
}

}  // namespace

double evaluate_loss(CnnModel& model, std::span<const namf::HeatmapSample> samples,
                     const LabelNormalizer& norm) {
  require(!samples.empty(), "loss over an empty set");
  double acc = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += kInferChunk) {
    const std::size_t n = std::min(kInferChunk, samples.size() - start);
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor pred = model.forward(make_batch(samples, idx, model.input_shape()), Mode::kInfer);
    acc += euclidean_loss(pred, make_targets(samples, idx, norm)).value * static_cast<double>(n);
  }
  return acc / static_cast<double>(samples.size());
}

TrainHistory train(CnnModel& model, std::span<const namf::HeatmapSample> train_set,
                   std::span<const namf::HeatmapSample> val,
                   const namf::HeatmapGrid& grid, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
  config.validate();
  require(!train_set.empty(), "training set is empty");
  const LabelNormalizer norm(grid);
  require(norm.dim() == model.output_dim(), "model output does not match the label dimension");
  const std::size_t batch = std::min(config.batch_size, train_set.size());

  Adam adam(config.adam());
  TrainHistory h;
  CnnModel best = model;
  double best_loss = INFINITY;
  std::size_t since_best = 0;
  std::uint64_t step = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double acc = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, n);
      model.zero_grad();
      const Tensor pred = model.forward(make_batch(train_set, idx, model.input_shape()), Mode::kTrain);
      LossResult loss;
      try {
        loss = euclidean_loss(pred, make_targets(train_set, idx, norm));
      } catch (const Error& e) {
        fail(e.code(), std::string(e.what()) + " at epoch " + std::to_string(epoch));
      }
      model.backward(loss.grad);
      adam.step(model.trainable_parameters(), ++step);
      acc += loss.value * static_cast<double>(n);
    }
    const double train_loss = acc / static_cast<double>(order.size());
    h.train_loss.push_back(train_loss);
    double select = train_loss;
    double val_loss = NAN;
    if (!val.empty()) {
      val_loss = evaluate_loss(model, val, norm);
      h.val_loss.push_back(val_loss);
      select = val_loss;
    }
    if (!std::isfinite(select)) {
      fail(ErrorCode::kNumerical, "numerical divergence at epoch " + std::to_string(epoch));
    }
    if (on_epoch) on_epoch(epoch, train_loss, val_loss);
    if (select < best_loss) {
      best_loss = select;
      best = model;
      h.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      break;
    }
  }
  model = std::move(best);
  model.zero_grad();
  h.best_loss = best_loss;
  return h;
}

std::vector<estimators::Estimate> predict_denormalized(
    CnnModel& model, std::span<const namf::HeatmapSample> samples, const namf::HeatmapGrid& grid) {
  const LabelNormalizer norm(grid);
  require(norm.dim() == model.output_dim(), "model output does not match the grid");
  std::vector<estimators::Estimate> out;
  out.reserve(samples.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += kInferChunk) {
    const std::size_t n = std::min(kInferChunk, samples.size() - start);
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor pred = model.forward(make_batch(samples, idx, model.input_shape()), Mode::kInfer);
    for (std::size_t b = 0; b < n; ++b) {
      const namf::Label l = norm.denormalize(
          std::span<const double>(pred.values.data() + b * norm.dim(), norm.dim()));
      out.push_back(estimators::Estimate::make(l.range_m, l.azimuth_deg, l.velocity_mps,
                                               estimators::Method::kCnn));
    }
  }
  return out;
}

estimators::Estimate predict_denormalized(CnnModel& model, const namf::HeatmapSample& sample,
                                          const namf::HeatmapGrid& grid) {
  return predict_denormalized(model, std::span<const namf::HeatmapSample>(&sample, 1), grid)
      .front();
}

}  // namespace radloc::nn
