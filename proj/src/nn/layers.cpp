// SPDX-License-Identifier: Apache-2.0
#include "radloc/nn/layers.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace radloc::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

Shape with_batch(std::size_t batch, const Shape& per_sample) {
  Shape s{batch};
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return s;
}

Shape per_sample(const Tensor& t) { return Shape(t.shape.begin() + 1, t.shape.end()); }

void expect_rank(const Tensor& t, std::size_t rank, const char* layer) {
  if (t.shape.size() != rank) {
    fail(ErrorCode::kInvalidArgument, std::string(layer) + ": expected rank-" +
                                          std::to_string(rank) + " input, got " +
                                          shape_string(t.shape));
  }
}

}  // namespace

const char* layer_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kDense: return "dense";
  }
  return "unknown";
}

void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (double& v : w.values) v = u(rng);
}

// ---------------------------------------------------------------- Conv

Conv::Conv(std::size_t in_channels, std::size_t out_channels, std::size_t k_az,
           std::size_t k_vel)
    : weight({out_channels, in_channels, k_az, k_vel}),
      bias({out_channels}),
      in_(in_channels),
      out_(out_channels),
      k_az_(k_az),
      k_vel_(k_vel) {
  require(in_ > 0 && out_ > 0 && k_az_ > 0 && k_vel_ > 0, "conv dimensions must be positive");
}

std::vector<std::int64_t> Conv::attributes() const {
  return {static_cast<std::int64_t>(in_), static_cast<std::int64_t>(out_),
          static_cast<std::int64_t>(k_az_), static_cast<std::int64_t>(k_vel_)};
}

Shape Conv::output_shape(const Shape& in) const {
  require(in.size() == 4 && in[0] == in_, "conv: input must be (channels, range, az, vel)");
  if (in[2] < k_az_ || in[3] < k_vel_) {
    fail(ErrorCode::kInvalidArgument, "conv: input " + shape_string(in) + " smaller than kernel");
  }
  return {out_, in[1], in[2] - k_az_ + 1, in[3] - k_vel_ + 1};
}

namespace {

// Unfolds one sample into a (C*k_az*k_vel) x (D0*O1*O2) row-major matrix.
void im2col(const double* x, std::size_t C, std::size_t D0, std::size_t D1, std::size_t D2,
            std::size_t k1, std::size_t k2, RowMat& cols) {
  const std::size_t O1 = D1 - k1 + 1, O2 = D2 - k2 + 1;
  const std::size_t P = D0 * O1 * O2;
  cols.resize(static_cast<Eigen::Index>(C * k1 * k2), static_cast<Eigen::Index>(P));
  double* out = cols.data();
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t a = 0; a < k1; ++a) {
      for (std::size_t b = 0; b < k2; ++b) {
        for (std::size_t d0 = 0; d0 < D0; ++d0) {
          for (std::size_t o1 = 0; o1 < O1; ++o1) {
            const double* src = x + ((c * D0 + d0) * D1 + o1 + a) * D2 + b;
            for (std::size_t o2 = 0; o2 < O2; ++o2) *out++ = src[o2];
          }
        }
      }
    }
  }
}

void col2im_add(const RowMat& cols, std::size_t C, std::size_t D0, std::size_t D1,
                std::size_t D2, std::size_t k1, std::size_t k2, double* dx) {
  const std::size_t O1 = D1 - k1 + 1, O2 = D2 - k2 + 1;
  const double* in = cols.data();
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t a = 0; a < k1; ++a) {
      for (std::size_t b = 0; b < k2; ++b) {
        for (std::size_t d0 = 0; d0 < D0; ++d0) {
          for (std::size_t o1 = 0; o1 < O1; ++o1) {
            double* dst = dx + ((c * D0 + d0) * D1 + o1 + a) * D2 + b;
            for (std::size_t o2 = 0; o2 < O2; ++o2) dst[o2] += *in++;
          }
        }
      }
    }
  }
}

}  // namespace

Tensor Conv::forward(const Tensor& in, Mode mode) {
  expect_rank(in, 5, "conv");
  const Shape out_ps = output_shape(per_sample(in));
  const std::size_t B = in.shape[0], D0 = in.shape[2], D1 = in.shape[3], D2 = in.shape[4];
  const std::size_t P = out_ps[1] * out_ps[2] * out_ps[3];
  const std::size_t in_stride = in_ * D0 * D1 * D2;
  Tensor out(with_batch(B, out_ps));
  const ConstRowMap W(weight.values.data(), static_cast<Eigen::Index>(out_),
                      static_cast<Eigen::Index>(in_ * k_az_ * k_vel_));
  const Eigen::Map<const Eigen::VectorXd> bvec(bias.values.data(), static_cast<Eigen::Index>(out_));
  RowMat cols;
  for (std::size_t s = 0; s < B; ++s) {
    im2col(in.values.data() + s * in_stride, in_, D0, D1, D2, k_az_, k_vel_, cols);
    RowMap Y(out.values.data() + s * out_ * P, static_cast<Eigen::Index>(out_),
             static_cast<Eigen::Index>(P));
    Y.noalias() = W * cols;
    Y.colwise() += bvec;
  }
  if (mode == Mode::kTrain) input_ = in;
  return out;
}

Tensor Conv::backward(const Tensor& grad_out, bool need_input_grad) {
  if (input_.values.empty()) fail(ErrorCode::kState, "conv: backward without forward");
  const std::size_t B = input_.shape[0], D0 = input_.shape[2], D1 = input_.shape[3],
                    D2 = input_.shape[4];
  const std::size_t P = grad_out.shape[2] * grad_out.shape[3] * grad_out.shape[4];
  const std::size_t in_stride = in_ * D0 * D1 * D2;
  const Eigen::Index R = static_cast<Eigen::Index>(in_ * k_az_ * k_vel_);
  const ConstRowMap W(weight.values.data(), static_cast<Eigen::Index>(out_), R);

  Tensor dx;
  if (need_input_grad) dx = Tensor(input_.shape);
  const bool learn = !frozen();
  if (learn) {
    weight.ensure_grad();
    bias.ensure_grad();
  }
  RowMap dW(learn ? weight.grad.data() : nullptr, learn ? static_cast<Eigen::Index>(out_) : 0,
            learn ? R : 0);
  RowMat cols, dcols;
  for (std::size_t s = 0; s < B; ++s) {
    const ConstRowMap G(grad_out.values.data() + s * out_ * P, static_cast<Eigen::Index>(out_),
                        static_cast<Eigen::Index>(P));
    if (learn) {
      im2col(input_.values.data() + s * in_stride, in_, D0, D1, D2, k_az_, k_vel_, cols);
      dW.noalias() += G * cols.transpose();
      for (std::size_t o = 0; o < out_; ++o) bias.grad[o] += G.row(static_cast<Eigen::Index>(o)).sum();
    }
    if (need_input_grad) {
      dcols.noalias() = W.transpose() * G;
      col2im_add(dcols, in_, D0, D1, D2, k_az_, k_vel_, dx.values.data() + s * in_stride);
    }
  }
  input_ = Tensor();
  return dx;
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::size_t channels, double momentum, double eps)
    : gamma({channels}, 1.0),
      beta({channels}, 0.0),
      running_mean({channels}, 0.0),
      running_var({channels}, 1.0),
      channels_(channels),
      momentum_(momentum),
      eps_(eps) {
  require(channels > 0, "batchnorm needs at least one channel");
}

std::vector<std::int64_t> BatchNorm::attributes() const {
  return {static_cast<std::int64_t>(channels_)};
}

Tensor BatchNorm::forward(const Tensor& in, Mode mode) {
  require(in.shape.size() >= 2 && in.shape[1] == channels_, "batchnorm: channel mismatch");
  const std::size_t B = in.shape[0];
  const std::size_t S = in.size() / (B * channels_);
  const std::size_t n = B * S;
  const bool batch_stats = (mode == Mode::kTrain) && !frozen();

  std::vector<double> mean(channels_), var(channels_);
  if (batch_stats) {
    require(n >= 2, "batchnorm: training needs more than one value per channel");
    for (std::size_t c = 0; c < channels_; ++c) {
      double acc = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const double* x = in.values.data() + (b * channels_ + c) * S;
        for (std::size_t i = 0; i < S; ++i) acc += x[i];
      }
      mean[c] = acc / static_cast<double>(n);
      double sq = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const double* x = in.values.data() + (b * channels_ + c) * S;
        for (std::size_t i = 0; i < S; ++i) {
          const double d = x[i] - mean[c];
          sq += d * d;
        }
      }
      var[c] = sq / static_cast<double>(n);
    }
  } else {
    mean.assign(running_mean.values.begin(), running_mean.values.end());
    var.assign(running_var.values.begin(), running_var.values.end());
  }

  Tensor out(in.shape);
  std::vector<double> inv_std(channels_);
  for (std::size_t c = 0; c < channels_; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps_);
  const bool cache = (mode == Mode::kTrain);
  if (cache) xhat_.resize(in.size());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const std::size_t off = (b * channels_ + c) * S;
      for (std::size_t i = 0; i < S; ++i) {
        const double xh = (in.values[off + i] - mean[c]) * inv_std[c];
        if (cache) xhat_[off + i] = xh;
        out.values[off + i] = gamma.values[c] * xh + beta.values[c];
      }
    }
  }

  if (batch_stats) {
    const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
    for (std::size_t c = 0; c < channels_; ++c) {
      running_mean.values[c] = (1.0 - momentum_) * running_mean.values[c] + momentum_ * mean[c];
      running_var.values[c] =
          (1.0 - momentum_) * running_var.values[c] + momentum_ * var[c] * unbias;
    }
  }
  if (cache) {
    used_batch_stats_ = batch_stats;
    inv_std_ = inv_std;
    in_shape_ = in.shape;
  }
  return out;
}

Tensor BatchNorm::backward(const Tensor& grad_out, bool need_input_grad) {
  if (in_shape_.empty()) fail(ErrorCode::kState, "batchnorm: backward without forward");
  const std::size_t B = in_shape_[0];
  const std::size_t S = grad_out.size() / (B * channels_);
  const double n = static_cast<double>(B * S);

  std::vector<double> sum_dy(channels_, 0.0), sum_dy_xhat(channels_, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const std::size_t off = (b * channels_ + c) * S;
      for (std::size_t i = 0; i < S; ++i) {
        sum_dy[c] += grad_out.values[off + i];
        sum_dy_xhat[c] += grad_out.values[off + i] * xhat_[off + i];
      }
    }
  }
  if (!frozen()) {
    gamma.ensure_grad();
    beta.ensure_grad();
    for (std::size_t c = 0; c < channels_; ++c) {
      gamma.grad[c] += sum_dy_xhat[c];
      beta.grad[c] += sum_dy[c];
    }
  }
  Tensor dx;
  if (need_input_grad) {
    dx = Tensor(in_shape_);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < channels_; ++c) {
        const std::size_t off = (b * channels_ + c) * S;
        const double k = gamma.values[c] * inv_std_[c];
        for (std::size_t i = 0; i < S; ++i) {
          const double dy = grad_out.values[off + i];
          dx.values[off + i] =
              used_batch_stats_
                  ? k * (dy - sum_dy[c] / n - xhat_[off + i] * sum_dy_xhat[c] / n)
                  : k * dy;
        }
      }
    }
  }
  in_shape_.clear();
  return dx;
}

// ---------------------------------------------------------------- Relu

Tensor Relu::forward(const Tensor& in, Mode mode) {
  Tensor out(in.shape);
  const bool cache = (mode == Mode::kTrain);
  if (cache) mask_.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const bool pos = in.values[i] > 0.0;
    out.values[i] = pos ? in.values[i] : 0.0;
    if (cache) mask_[i] = pos;
  }
  if (cache) in_shape_ = in.shape;
  return out;
}

Tensor Relu::backward(const Tensor& grad_out, bool need_input_grad) {
  if (in_shape_.empty()) fail(ErrorCode::kState, "relu: backward without forward");
  Tensor dx;
  if (need_input_grad) {
    dx = Tensor(in_shape_);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.values[i] = mask_[i] ? grad_out.values[i] : 0.0;
  }
  in_shape_.clear();
  return dx;
}

// ---------------------------------------------------------------- MaxPool

MaxPool::MaxPool(std::size_t p_az, std::size_t p_vel) : p_az_(p_az), p_vel_(p_vel) {
  require(p_az > 0 && p_vel > 0, "pool extents must be positive");
}

std::vector<std::int64_t> MaxPool::attributes() const {
  return {static_cast<std::int64_t>(p_az_), static_cast<std::int64_t>(p_vel_)};
}

Shape MaxPool::output_shape(const Shape& in) const {
  require(in.size() == 4, "maxpool: input must be (channels, range, az, vel)");
  if (in[2] < p_az_ || in[3] < p_vel_) {
    fail(ErrorCode::kInvalidArgument, "maxpool: input " + shape_string(in) + " smaller than pool");
  }
  return {in[0], in[1], in[2] / p_az_, in[3] / p_vel_};
}

Tensor MaxPool::forward(const Tensor& in, Mode mode) {
  expect_rank(in, 5, "maxpool");
  const Shape ops = output_shape(per_sample(in));
  const std::size_t B = in.shape[0], C = in.shape[1], D0 = in.shape[2], D1 = in.shape[3],
                    D2 = in.shape[4];
  const std::size_t O1 = ops[2], O2 = ops[3];
  Tensor out(with_batch(B, ops));
  const bool cache = (mode == Mode::kTrain);
  if (cache) argmax_.resize(out.size());
  std::size_t o = 0;
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    for (std::size_t d0 = 0; d0 < D0; ++d0) {
      const std::size_t base = (bc * D0 + d0) * D1 * D2;
      for (std::size_t o1 = 0; o1 < O1; ++o1) {
        for (std::size_t o2 = 0; o2 < O2; ++o2, ++o) {
          std::size_t best = base + (o1 * p_az_) * D2 + o2 * p_vel_;
          for (std::size_t a = 0; a < p_az_; ++a) {
            for (std::size_t b = 0; b < p_vel_; ++b) {
              const std::size_t idx = base + (o1 * p_az_ + a) * D2 + o2 * p_vel_ + b;
              if (in.values[idx] > in.values[best]) best = idx;
            }
          }
          out.values[o] = in.values[best];
          if (cache) argmax_[o] = best;
        }
      }
    }
  }
  if (cache) in_shape_ = in.shape;
  return out;
}

Tensor MaxPool::backward(const Tensor& grad_out, bool need_input_grad) {
  if (in_shape_.empty()) fail(ErrorCode::kState, "maxpool: backward without forward");
  Tensor dx;
  if (need_input_grad) {
    dx = Tensor(in_shape_);
    for (std::size_t o = 0; o < grad_out.size(); ++o) dx.values[argmax_[o]] += grad_out.values[o];
  }
  in_shape_.clear();
  return dx;
}

// ---------------------------------------------------------------- Flatten

Tensor Flatten::forward(const Tensor& in, Mode mode) {
  require(!in.shape.empty(), "flatten: empty input");
  Tensor out;
  out.shape = {in.shape[0], in.size() / std::max<std::size_t>(in.shape[0], 1)};
  out.values = in.values;
  if (mode == Mode::kTrain) in_shape_ = in.shape;
  return out;
}

Tensor Flatten::backward(const Tensor& grad_out, bool need_input_grad) {
  if (in_shape_.empty()) fail(ErrorCode::kState, "flatten: backward without forward");
  Tensor dx;
  if (need_input_grad) {
    dx.shape = in_shape_;
    dx.values = grad_out.values;
  }
  in_shape_.clear();
  return dx;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t in_features, std::size_t out_features)
    : weight({out_features, in_features}), bias({out_features}), in_(in_features), out_(out_features) {
  require(in_ > 0 && out_ > 0, "dense dimensions must be positive");
}

std::vector<std::int64_t> Dense::attributes() const {
  return {static_cast<std::int64_t>(in_), static_cast<std::int64_t>(out_)};
}

Shape Dense::output_shape(const Shape& in) const {
  if (in.size() != 1 || in[0] != in_) {
    fail(ErrorCode::kInvalidArgument,
         "dense: expected " + std::to_string(in_) + " features, got " + shape_string(in));
  }
  return {out_};
}

Tensor Dense::forward(const Tensor& in, Mode mode) {
  expect_rank(in, 2, "dense");
  output_shape({in.shape[1]});
  const Eigen::Index B = static_cast<Eigen::Index>(in.shape[0]);
  Tensor out({in.shape[0], out_});
  const ConstRowMap X(in.values.data(), B, static_cast<Eigen::Index>(in_));
  const ConstRowMap W(weight.values.data(), static_cast<Eigen::Index>(out_),
                      static_cast<Eigen::Index>(in_));
  RowMap Y(out.values.data(), B, static_cast<Eigen::Index>(out_));
  Y.noalias() = X * W.transpose();
  Y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.values.data(),
                                                      static_cast<Eigen::Index>(out_));
  if (mode == Mode::kTrain) input_ = in;
  return out;
}

Tensor Dense::backward(const Tensor& grad_out, bool need_input_grad) {
  if (input_.values.empty()) fail(ErrorCode::kState, "dense: backward without forward");
  const Eigen::Index B = static_cast<Eigen::Index>(input_.shape[0]);
  const ConstRowMap G(grad_out.values.data(), B, static_cast<Eigen::Index>(out_));
  const ConstRowMap X(input_.values.data(), B, static_cast<Eigen::Index>(in_));
  const ConstRowMap W(weight.values.data(), static_cast<Eigen::Index>(out_),
                      static_cast<Eigen::Index>(in_));
  if (!frozen()) {
    weight.ensure_grad();
    bias.ensure_grad();
    RowMap dW(weight.grad.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
    dW.noalias() += G.transpose() * X;
    Eigen::Map<Eigen::RowVectorXd>(bias.grad.data(), static_cast<Eigen::Index>(out_)) +=
        G.colwise().sum();
  }
  Tensor dx;
  if (need_input_grad) {
    dx = Tensor(input_.shape);
    RowMap dX(dx.values.data(), B, static_cast<Eigen::Index>(in_));
    dX.noalias() = G * W;
  }
  input_ = Tensor();
  return dx;
}

}  // namespace radloc::nn
