// SPDX-License-Identifier: Apache-2.0
#include "radloc/nn/optim.hpp"

#include <cmath>

#include "radloc/common.hpp"

namespace radloc::nn {

LossResult euclidean_loss(const Tensor& pred, const Tensor& truth) {
  require(pred.shape == truth.shape && pred.shape.size() == 2, "loss: shape mismatch");
  const std::size_t B = pred.shape[0], D = pred.shape[1];
  require(B > 0 && D > 0, "loss: empty batch");
  LossResult r;
  r.grad = Tensor(pred.shape);
  const double inv_b = 1.0 / static_cast<double>(B);
  double acc = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    double sq = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      const double e = pred.values[b * D + d] - truth.values[b * D + d];
      sq += e * e;
    }
    const double dist = std::sqrt(sq);
    acc += dist;
    if (dist > 0.0) {
      for (std::size_t d = 0; d < D; ++d) {
        r.grad.values[b * D + d] = (pred.values[b * D + d] - truth.values[b * D + d]) * inv_b / dist;
      }
    }
  }
  r.value = acc * inv_b;
  if (!std::isfinite(r.value)) fail(ErrorCode::kNumerical, "numerical divergence in loss");
  return r;
}

void Adam::step(const std::vector<Tensor*>& params, std::uint64_t step_index) {
  require(step_index >= 1, "adam step index starts at 1");
  if (m_.size() != params.size()) {
    m_.assign(params.size(), {});
    v_.assign(params.size(), {});
  }
  const auto& c = config_;
  const double t = static_cast<double>(step_index);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (!p.has_grad()) continue;
    if (m_[i].size() != p.size()) {
      m_[i].assign(p.size(), 0.0);
      v_[i].assign(p.size(), 0.0);
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = p.grad[j] + c.weight_decay * p.values[j];
      m_[i][j] = c.beta1 * m_[i][j] + (1.0 - c.beta1) * g;
      v_[i][j] = c.beta2 * v_[i][j] + (1.0 - c.beta2) * g * g;
      const double mh = m_[i][j] / bc1;
      const double vh = v_[i][j] / bc2;
      p.values[j] -= c.learning_rate * mh / (std::sqrt(vh) + c.eps);
    }
  }
}

}  // namespace radloc::nn
