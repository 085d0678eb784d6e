#pragma once

#include <atomic>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "sepnet/errors.hpp"

namespace sepnet {

#ifdef SEPNET_REAL32
using real = float;
#else
using real = double;
#endif

// ===== allocation tracking ==================================================
// Logical high-water mark over all live tensor payloads. Used by the
// benchmark harness as a deterministic per-cell memory metric alongside
// sampled RSS.

namespace memtrack {
int64_t current_bytes();
int64_t peak_bytes();
void reset_peak();
namespace detail {
void add(int64_t bytes);
void sub(int64_t bytes);
}  // namespace detail
}  // namespace memtrack

template <class T>
struct TrackingAlloc {
  using value_type = T;
  TrackingAlloc() = default;
  template <class U>
  TrackingAlloc(const TrackingAlloc<U>&) {}
  T* allocate(std::size_t n) {
    memtrack::detail::add(static_cast<int64_t>(n * sizeof(T)));
    return static_cast<T*>(::operator new(n * sizeof(T)));
  }
  void deallocate(T* p, std::size_t n) noexcept {
    memtrack::detail::sub(static_cast<int64_t>(n * sizeof(T)));
    ::operator delete(p);
  }
  bool operator==(const TrackingAlloc&) const { return true; }
  bool operator!=(const TrackingAlloc&) const { return false; }
};

// ===== tensor ===============================================================

inline std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

// Dense row-major tensor. Invariant: product(shape) == data.size().
class Tensor {
 public:
  using Storage = std::vector<real, TrackingAlloc<real>>;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape);
  Tensor(std::vector<int64_t> shape, std::vector<real> values);

  static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int64_t> shape, real v);
  static Tensor scalar(real v);

  const std::vector<int64_t>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  real* data() { return data_.data(); }
  const real* data() const { return data_.data(); }
  real& operator[](int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  real operator[](int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // Rank-2 accessors; unchecked beyond debug builds.
  real& at(int64_t i, int64_t j) { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }
  real at(int64_t i, int64_t j) const { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }

  void fill(real v);
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  std::vector<int64_t> shape_;
  Storage data_;
};

// ===== operations ===========================================================
// Accumulation over the contracted index is fixed left-to-right so results
// are bit-reproducible run to run.

// [m x k] * [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);
// a [m x k], b [n x k] -> a * b^T, [m x n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// a [k x m], b [k x n] -> a^T * b, [m x n]
Tensor matmul_tn(const Tensor& a, const Tensor& b);

// d rank-1 tensors -> rank-d tensor with element prod_n v_n[i_n].
Tensor outer_product_chain(const std::vector<Tensor>& vecs);

// stack [r x N1 x ... x Nd] weighted along the mode axis by coeffs [r]
// -> [N1 x ... x Nd].
Tensor reduce_modes(const Tensor& stack, const Tensor& coeffs);

// Elementwise; shapes must match exactly (no broadcasting).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, real c);
// y += c * x
void axpy_into(Tensor& y, real c, const Tensor& x);

Tensor linspace(real lo, real hi, int64_t n);

// Cartesian product of d rank-1 axes -> [prod N_n x d] point list, row-major
// over the grid (last axis fastest), matching the flattening used by
// outer_product_chain.
Tensor meshgrid_points(const std::vector<Tensor>& axes);

}  // namespace sepnet
