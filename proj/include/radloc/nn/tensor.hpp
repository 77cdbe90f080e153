// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <new>
#include <string>
#include <vector>

namespace radloc::nn {

using Shape = std::vector<std::size_t>;

/// Cache-line aligned storage. Vectorized products peel a number of leading
/// elements that depends on pointer alignment, so a fixed alignment keeps
/// summation order, and hence results, identical from run to run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major real tensor with an optional gradient buffer of the same
/// shape. An empty `grad` means no gradient is attached.
struct Tensor {
  Shape shape;
  Buffer values;
  Buffer grad;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  bool has_grad() const { return !grad.empty(); }
  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
  void zero_grad() { grad.assign(values.size(), 0.0); }
  void drop_grad() { grad.clear(); grad.shrink_to_fit(); }

  /// Throws Error(kNumerical, "numerical divergence ...") on NaN/Inf.
  void check_finite(const char* where) const;
};

}  // namespace radloc::nn
