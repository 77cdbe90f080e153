// SPDX-License-Identifier: Apache-2.0
#include "radloc/nn/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "radloc/common.hpp"

namespace radloc::nn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), values(shape_size(shape), fill) {}

void Tensor::check_finite(const char* where) const {
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::kNumerical, std::string("numerical divergence in ") + where);
  }
}

}  // namespace radloc::nn
