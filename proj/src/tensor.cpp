#include "sepnet/tensor.hpp"

#include <algorithm>

namespace sepnet {

namespace memtrack {
namespace {
std::atomic<int64_t> g_current{0};
std::atomic<int64_t> g_peak{0};
}  // namespace

int64_t current_bytes() { return g_current.load(std::memory_order_relaxed); }
int64_t peak_bytes() { return g_peak.load(std::memory_order_relaxed); }
void reset_peak() { g_peak.store(g_current.load(std::memory_order_relaxed), std::memory_order_relaxed); }

namespace detail {
void add(int64_t bytes) {
  int64_t cur = g_current.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  int64_t peak = g_peak.load(std::memory_order_relaxed);
  while (cur > peak && !g_peak.compare_exchange_weak(peak, cur, std::memory_order_relaxed)) {
  }
}
void sub(int64_t bytes) { g_current.fetch_sub(bytes, std::memory_order_relaxed); }
}  // namespace detail
}  // namespace memtrack

namespace {

int64_t checked_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw DimensionError("negative extent in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shapes disagree: " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
}

}  // namespace

Tensor::Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<std::size_t>(checked_numel(shape_)), real(0));
}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<real> values) : shape_(std::move(shape)) {
  int64_t n = checked_numel(shape_);
  if (n != static_cast<int64_t>(values.size())) {
    throw DimensionError("shape " + shape_str(shape_) + " wants " + std::to_string(n) +
                         " values, got " + std::to_string(values.size()));
  }
  data_.assign(values.begin(), values.end());
}

Tensor Tensor::full(std::vector<int64_t> shape, real v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

Tensor Tensor::scalar(real v) {
  Tensor t(std::vector<int64_t>{});
  t.data_.assign(1, v);
  return t;
}

void Tensor::fill(real v) { std::fill(data_.begin(), data_.end(), v); }

// ===== matmul family ========================================================

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimensionError("matmul wants rank-2 operands, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul inner extents disagree: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  const real* A = a.data();
  const real* B = b.data();
  real* O = out.data();
  // i-k-j order: k ascends for every output element, rows stay contiguous.
  for (int64_t i = 0; i < m; ++i) {
    real* Oi = O + i * n;
    const real* Ai = A + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const real aip = Ai[p];
      const real* Bp = B + p * n;
      for (int64_t j = 0; j < n; ++j) Oi[j] += aip * Bp[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    throw DimensionError("matmul_nt wants [m x k],[n x k], got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  }
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  Tensor out({m, n});
  const real* A = a.data();
  const real* B = b.data();
  real* O = out.data();
  for (int64_t i = 0; i < m; ++i) {
    const real* Ai = A + i * k;
    for (int64_t j = 0; j < n; ++j) {
      const real* Bj = B + j * k;
      real acc = 0;
      for (int64_t p = 0; p < k; ++p) acc += Ai[p] * Bj[p];
      O[i * n + j] = acc;
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    throw DimensionError("matmul_tn wants [k x m],[k x n], got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  }
  const int64_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  const real* A = a.data();
  const real* B = b.data();
  real* O = out.data();
  for (int64_t p = 0; p < k; ++p) {
    const real* Ap = A + p * m;
    const real* Bp = B + p * n;
    for (int64_t i = 0; i < m; ++i) {
      const real api = Ap[i];
      real* Oi = O + i * n;
      for (int64_t j = 0; j < n; ++j) Oi[j] += api * Bp[j];
    }
  }
  return out;
}

// ===== separable building blocks ============================================

Tensor outer_product_chain(const std::vector<Tensor>& vecs) {
  if (vecs.empty()) throw ArgumentError("outer_product_chain: empty vector list");
  for (const Tensor& v : vecs) {
    if (v.rank() != 1) {
      throw DimensionError("outer_product_chain wants rank-1 factors, got " +
                           shape_str(v.shape()));
    }
  }
  std::vector<int64_t> shape{vecs[0].dim(0)};
  Tensor out = vecs[0];
  for (std::size_t n = 1; n < vecs.size(); ++n) {
    const Tensor& v = vecs[n];
    shape.push_back(v.dim(0));
    Tensor nxt(shape);
    const int64_t outer = out.numel(), inner = v.numel();
    real* dst = nxt.data();
    const real* src = out.data();
    const real* vv = v.data();
    for (int64_t i = 0; i < outer; ++i) {
      for (int64_t j = 0; j < inner; ++j) dst[i * inner + j] = src[i] * vv[j];
    }
    out = std::move(nxt);
  }
  return out;
}

Tensor reduce_modes(const Tensor& stack, const Tensor& coeffs) {
  if (stack.rank() < 2) {
    throw DimensionError("reduce_modes wants a mode axis plus grid axes, got " +
                         shape_str(stack.shape()));
  }
  if (coeffs.rank() != 1 || coeffs.dim(0) != stack.dim(0)) {
    throw DimensionError("reduce_modes: coeffs " + shape_str(coeffs.shape()) +
                         " do not match mode axis of " + shape_str(stack.shape()));
  }
  std::vector<int64_t> shape(stack.shape().begin() + 1, stack.shape().end());
  Tensor out(shape);
  const int64_t r = stack.dim(0), cell = out.numel();
  const real* S = stack.data();
  real* O = out.data();
  for (int64_t k = 0; k < r; ++k) {  // mode order fixed: k ascending
    const real c = coeffs[k];
    const real* Sk = S + k * cell;
    for (int64_t i = 0; i < cell; ++i) O[i] += c * Sk[i];
  }
  return out;
}

// ===== elementwise ==========================================================

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  real* O = out.data();
  const real* B = b.data();
  for (int64_t i = 0; i < out.numel(); ++i) O[i] += B[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a;
  real* O = out.data();
  const real* B = b.data();
  for (int64_t i = 0; i < out.numel(); ++i) O[i] -= B[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a;
  real* O = out.data();
  const real* B = b.data();
  for (int64_t i = 0; i < out.numel(); ++i) O[i] *= B[i];
  return out;
}

Tensor scale(const Tensor& a, real c) {
  Tensor out = a;
  real* O = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) O[i] *= c;
  return out;
}

void axpy_into(Tensor& y, real c, const Tensor& x) {
  require_same_shape(y, x, "axpy_into");
  real* Y = y.data();
  const real* X = x.data();
  for (int64_t i = 0; i < y.numel(); ++i) Y[i] += c * X[i];
}

Tensor linspace(real lo, real hi, int64_t n) {
  if (n < 2) throw ArgumentError("linspace wants n >= 2, got " + std::to_string(n));
  Tensor out({n});
  const real step = (hi - lo) / static_cast<real>(n - 1);
  for (int64_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<real>(i);
  out[n - 1] = hi;
  return out;
}

Tensor meshgrid_points(const std::vector<Tensor>& axes) {
  const int64_t d = static_cast<int64_t>(axes.size());
  if (d == 0) throw ArgumentError("meshgrid_points wants at least one axis");
  int64_t total = 1;
  for (const Tensor& ax : axes) {
    if (ax.rank() != 1 || ax.numel() == 0) {
      throw DimensionError("meshgrid_points: axes must be non-empty rank-1, got " +
                           shape_str(ax.shape()));
    }
    total = checked_numel({total, ax.numel()});
  }
  Tensor out({total, d});
  std::vector<int64_t> idx(static_cast<std::size_t>(d), 0);
  for (int64_t p = 0; p < total; ++p) {
    for (int64_t n = 0; n < d; ++n) {
      out.at(p, n) = axes[static_cast<std::size_t>(n)][idx[static_cast<std::size_t>(n)]];
    }
    for (int64_t n = d - 1; n >= 0; --n) {
      auto& i = idx[static_cast<std::size_t>(n)];
      if (++i < axes[static_cast<std::size_t>(n)].numel()) break;
      i = 0;
    }
  }
  return out;
}

}  // namespace sepnet
