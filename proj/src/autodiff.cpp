#include "sepnet/autodiff.hpp"

#include <cmath>

namespace sepnet::ad {

namespace {

// Activation value and its first three derivatives, elementwise. tanh
// derivatives are written in terms of y = tanh(v) so the forward value can
// be reused:
//   g'   = 1 - y^2
//   g''  = -2 y (1 - y^2)
//   g''' = -2 (1 - y^2)(1 - 3 y^2)
// sine: cos, -sin, -cos.

real act_g0(Activation a, real v) {
  switch (a) {
    case Activation::Tanh: return std::tanh(v);
    case Activation::Sine: return std::sin(v);
  }
  throw UnsupportedError("unknown activation kind");
}

real act_g1(Activation a, real v) {
  switch (a) {
    case Activation::Tanh: {
      real y = std::tanh(v);
      return 1 - y * y;
    }
    case Activation::Sine: return std::cos(v);
  }
  throw UnsupportedError("unknown activation kind");
}

real act_g2(Activation a, real v) {
  switch (a) {
    case Activation::Tanh: {
      real y = std::tanh(v);
      return -2 * y * (1 - y * y);
    }
    case Activation::Sine: return -std::sin(v);
  }
  throw UnsupportedError("unknown activation kind");
}

real act_g3(Activation a, real v) {
  switch (a) {
    case Activation::Tanh: {
      real y = std::tanh(v);
      real s = 1 - y * y;
      return -2 * s * (1 - 3 * y * y);
    }
    case Activation::Sine: return -std::cos(v);
  }
  throw UnsupportedError("unknown activation kind");
}

Tensor reshape_copy(const Tensor& t, std::vector<int64_t> shape) {
  Tensor out(std::move(shape));
  if (out.numel() != t.numel()) {
    throw DimensionError("reshape: element counts disagree: " + shape_str(t.shape()) + " vs " +
                         shape_str(out.shape()));
  }
  real* dst = out.data();
  const real* src = t.data();
  for (int64_t i = 0; i < t.numel(); ++i) dst[i] = src[i];
  return out;
}

// Sum of a [B x n] tensor over rows -> [n].
Tensor rowsum(const Tensor& t) {
  const int64_t b = t.dim(0), n = t.dim(1);
  Tensor out({n});
  const real* T = t.data();
  real* O = out.data();
  for (int64_t i = 0; i < b; ++i) {
    const real* Ti = T + i * n;
    for (int64_t j = 0; j < n; ++j) O[j] += Ti[j];
  }
  return out;
}

}  // namespace

// ===== Var ==================================================================

const Tensor& Var::value() const {
  if (!valid()) throw ContractError("Var::value on an empty handle");
  return tape->value_of(id);
}

const std::vector<int64_t>& Var::shape() const { return value().shape(); }

// ===== Tape: recording ======================================================

const Tensor& Tape::value_of(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }

void Tape::check_owned(Var v, const char* op) const {
  if (!v.valid() || v.tape != this || v.id >= static_cast<NodeId>(nodes_.size())) {
    throw ContractError(std::string(op) + ": operand does not live on this tape");
  }
}

bool Tape::any_needs_grad(const std::vector<NodeId>& parents) const {
  for (NodeId p : parents) {
    if (nodes_[static_cast<std::size_t>(p)].needs_grad) return true;
  }
  return false;
}

Var Tape::record(Node&& n) {
  nodes_.push_back(std::move(n));
  ran_backward_ = false;
  return Var{this, static_cast<NodeId>(nodes_.size() - 1)};
}

Var Tape::leaf(Tensor v) {
  Node n;
  n.kind = OpKind::Leaf;
  n.needs_grad = true;
  n.value = std::move(v);
  return record(std::move(n));
}

Var Tape::constant(Tensor v) {
  Node n;
  n.kind = OpKind::Constant;
  n.needs_grad = false;
  n.value = std::move(v);
  return record(std::move(n));
}

Var Tape::add(Var a, Var b) {
  check_owned(a, "add");
  check_owned(b, "add");
  Node n;
  n.kind = OpKind::Add;
  n.parents = {a.id, b.id};
  n.needs_grad = any_needs_grad(n.parents);
  n.value = sepnet::add(a.value(), b.value());
  return record(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  check_owned(a, "sub");
  check_owned(b, "sub");
  Node n;
  n.kind = OpKind::Sub;
  n.parents = {a.id, b.id};
  n.needs_grad = any_needs_grad(n.parents);
  n.value = sepnet::sub(a.value(), b.value());
  return record(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  check_owned(a, "mul");
  check_owned(b, "mul");
  Node n;
  n.kind = OpKind::Mul;
  n.parents = {a.id, b.id};
  n.needs_grad = any_needs_grad(n.parents);
  n.value = sepnet::mul(a.value(), b.value());
  return record(std::move(n));
}

Var Tape::scale(Var a, real c) {
  check_owned(a, "scale");
  Node n;
  n.kind = OpKind::Scale;
  n.c = c;
  n.parents = {a.id};
  n.needs_grad = any_needs_grad(n.parents);
  n.value = sepnet::scale(a.value(), c);
  return record(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  check_owned(a, "matmul");
  check_owned(b, "matmul");
  Node n;
  n.kind = OpKind::Matmul;
  n.parents = {a.id, b.id};
  n.needs_grad = any_needs_grad(n.parents);
  n.value = sepnet::matmul(a.value(), b.value());
  return record(std::move(n));
}

Var Tape::matmul_nt(Var a, Var b) {
  check_owned(a, "matmul_nt");
  check_owned(b, "matmul_nt");
  Node n;
  n.kind = OpKind::MatmulNT;
  n.parents = {a.id, b.id};
  n.needs_grad = any_needs_grad(n.parents);
  n.value = sepnet::matmul_nt(a.value(), b.value());
  return record(std::move(n));
}

Var Tape::linear(Var x, Var W, Var b) {
  check_owned(x, "linear");
  check_owned(W, "linear");
  check_owned(b, "linear");
  const Tensor& xv = x.value();
  const Tensor& Wv = W.value();
  const Tensor& bv = b.value();
  if (xv.rank() != 2 || Wv.rank() != 2 || bv.rank() != 1 || xv.dim(1) != Wv.dim(1) ||
      bv.dim(0) != Wv.dim(0)) {
    throw DimensionError("linear: x " + shape_str(xv.shape()) + ", W " + shape_str(Wv.shape()) +
                         ", b " + shape_str(bv.shape()) + " are inconsistent");
  }
  Node n;
  n.kind = OpKind::Linear;
  n.parents = {x.id, W.id, b.id};
  n.needs_grad = any_needs_grad(n.parents);
  n.value = sepnet::matmul_nt(xv, Wv);
  real* O = n.value.data();
  const real* B = bv.data();
  const int64_t rows = n.value.dim(0), cols = n.value.dim(1);
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t j = 0; j < cols; ++j) O[i * cols + j] += B[j];
  }
  return record(std::move(n));
}

Var Tape::activation(Var v, Activation act) {
  check_owned(v, "activation");
  Node n;
  n.kind = OpKind::Act;
  n.act = act;
  n.parents = {v.id};
  n.needs_grad = any_needs_grad(n.parents);
  n.value = v.value();
  real* O = n.value.data();
  for (int64_t i = 0; i < n.value.numel(); ++i) O[i] = act_g0(act, O[i]);
  return record(std::move(n));
}

Var Tape::act_jet1(Var v, Var d1, Activation act) {
  check_owned(v, "act_jet1");
  check_owned(d1, "act_jet1");
  if (!v.value().same_shape(d1.value())) {
    throw DimensionError("act_jet1: v " + shape_str(v.shape()) + " vs d1 " + shape_str(d1.shape()));
  }
  Node n;
  n.kind = OpKind::ActJet1;
  n.act = act;
  n.parents = {v.id, d1.id};
  n.needs_grad = any_needs_grad(n.parents);
  n.value = d1.value();
  const real* V = v.value().data();
  real* O = n.value.data();
  for (int64_t i = 0; i < n.value.numel(); ++i) O[i] *= act_g1(act, V[i]);
  return record(std::move(n));
}

Var Tape::act_jet2(Var v, Var d1, Var d2, Activation act) {
  check_owned(v, "act_jet2");
  check_owned(d1, "act_jet2");
  check_owned(d2, "act_jet2");
  if (!v.value().same_shape(d1.value()) || !v.value().same_shape(d2.value())) {
    throw DimensionError("act_jet2: component shapes disagree");
  }
  Node n;
  n.kind = OpKind::ActJet2;
  n.act = act;
  n.parents = {v.id, d1.id, d2.id};
  n.needs_grad = any_needs_grad(n.parents);
  n.value = Tensor(v.value().shape());
  const real* V = v.value().data();
  const real* D1 = d1.value().data();
  const real* D2 = d2.value().data();
  real* O = n.value.data();
  for (int64_t i = 0; i < n.value.numel(); ++i) {
    O[i] = act_g2(act, V[i]) * D1[i] * D1[i] + act_g1(act, V[i]) * D2[i];
  }
  return record(std::move(n));
}

Var Tape::separable_grid(Var coeffs, const std::vector<Var>& factors) {
  check_owned(coeffs, "separable_grid");
  if (factors.empty()) throw ArgumentError("separable_grid: no axis factors");
  const Tensor& C = coeffs.value();
  if (C.rank() != 2) {
    throw DimensionError("separable_grid: coeffs must be [F x r], got " + shape_str(C.shape()));
  }
  const int64_t F = C.dim(0), r = C.dim(1);
  std::vector<int64_t> out_shape{F};
  for (const Var& f : factors) {
    check_owned(f, "separable_grid");
    const Tensor& Fv = f.value();
    if (Fv.rank() != 2 || Fv.dim(1) != r) {
      throw DimensionError("separable_grid: factor " + shape_str(Fv.shape()) +
                           " does not match mode count " + std::to_string(r));
    }
    out_shape.push_back(Fv.dim(0));
  }

  // Mode stack: for each mode k, the outer product of that mode's columns.
  const int d = static_cast<int>(factors.size());
  int64_t cell = 1;
  for (int n = 0; n < d; ++n) cell *= factors[static_cast<std::size_t>(n)].value().dim(0);
  Tensor stack({r, cell});
  {
    std::vector<Tensor> cols(static_cast<std::size_t>(d));
    for (int64_t k = 0; k < r; ++k) {
      for (int n = 0; n < d; ++n) {
        const Tensor& Fv = factors[static_cast<std::size_t>(n)].value();
        Tensor col({Fv.dim(0)});
        for (int64_t i = 0; i < Fv.dim(0); ++i) col[i] = Fv.at(i, k);
        cols[static_cast<std::size_t>(n)] = std::move(col);
      }
      Tensor grid = outer_product_chain(cols);
      real* dst = stack.data() + k * cell;
      const real* src = grid.data();
      for (int64_t i = 0; i < cell; ++i) dst[i] = src[i];
    }
  }

  Node n;
  n.kind = OpKind::SepGrid;
  n.parents.reserve(static_cast<std::size_t>(d) + 1);
  n.parents.push_back(coeffs.id);
  for (const Var& f : factors) n.parents.push_back(f.id);
  n.needs_grad = any_needs_grad(n.parents);
  n.value = Tensor(out_shape);
  for (int64_t f = 0; f < F; ++f) {
    Tensor row({r});
    for (int64_t k = 0; k < r; ++k) row[k] = C.at(f, k);
    Tensor out_f = reduce_modes(stack, row);  // stack rows viewed as [r x cell]
    real* dst = n.value.data() + f * cell;
    const real* src = out_f.data();
    for (int64_t i = 0; i < cell; ++i) dst[i] = src[i];
  }
  n.aux = std::move(stack);
  return record(std::move(n));
}

Var Tape::mean_sq(Var a) {
  check_owned(a, "mean_sq");
  const Tensor& A = a.value();
  if (A.numel() == 0) throw ArgumentError("mean_sq: empty tensor");
  Node n;
  n.kind = OpKind::MeanSq;
  n.parents = {a.id};
  n.needs_grad = any_needs_grad(n.parents);
  real acc = 0;
  const real* P = A.data();
  for (int64_t i = 0; i < A.numel(); ++i) acc += P[i] * P[i];
  n.value = Tensor::scalar(acc / static_cast<real>(A.numel()));
  return record(std::move(n));
}

Var Tape::sum(Var a) {
  check_owned(a, "sum");
  Node n;
  n.kind = OpKind::Sum;
  n.parents = {a.id};
  n.needs_grad = any_needs_grad(n.parents);
  real acc = 0;
  const real* P = a.value().data();
  for (int64_t i = 0; i < a.value().numel(); ++i) acc += P[i];
  n.value = Tensor::scalar(acc);
  return record(std::move(n));
}

void Tape::reset() {
  nodes_.clear();
  adjoints_.clear();
  ran_backward_ = false;
}

// ===== Tape: reverse pass ===================================================

void Tape::accum(NodeId p, const Tensor& delta) {
  Tensor& slot = adjoints_[static_cast<std::size_t>(p)];
  if (slot.numel() == 0) {
    slot = delta;
    return;
  }
  axpy_into(slot, real(1), delta);
}

void Tape::accum_scaled(NodeId p, const Tensor& delta, real c) {
  Tensor& slot = adjoints_[static_cast<std::size_t>(p)];
  if (slot.numel() == 0) {
    slot = sepnet::scale(delta, c);
    return;
  }
  axpy_into(slot, c, delta);
}

void Tape::apply_adjoint(NodeId i) {
  const Node& n = nodes_[static_cast<std::size_t>(i)];
  const Tensor& adj = adjoints_[static_cast<std::size_t>(i)];
  auto parent = [&](int idx) -> const Node& {
    return nodes_[static_cast<std::size_t>(n.parents[static_cast<std::size_t>(idx)])];
  };
  auto pid = [&](int idx) { return n.parents[static_cast<std::size_t>(idx)]; };
  auto wants = [&](int idx) { return parent(idx).needs_grad; };

  switch (n.kind) {
    case OpKind::Leaf:
    case OpKind::Constant:
      return;
    case OpKind::Add:
      if (wants(0)) accum(pid(0), adj);
      if (wants(1)) accum(pid(1), adj);
      return;
    case OpKind::Sub:
      if (wants(0)) accum(pid(0), adj);
      if (wants(1)) accum_scaled(pid(1), adj, real(-1));
      return;
    case OpKind::Mul:
      if (wants(0)) accum(pid(0), sepnet::mul(adj, parent(1).value));
      if (wants(1)) accum(pid(1), sepnet::mul(adj, parent(0).value));
      return;
    case OpKind::Scale:
      if (wants(0)) accum_scaled(pid(0), adj, n.c);
      return;
    case OpKind::Matmul:
      // out = a b: abar = adj b^T, bbar = a^T adj
      if (wants(0)) accum(pid(0), sepnet::matmul_nt(adj, parent(1).value));
      if (wants(1)) accum(pid(1), sepnet::matmul_tn(parent(0).value, adj));
      return;
    case OpKind::MatmulNT:
      // out = a b^T: abar = adj b, bbar = adj^T a
      if (wants(0)) accum(pid(0), sepnet::matmul(adj, parent(1).value));
      if (wants(1)) accum(pid(1), sepnet::matmul_tn(adj, parent(0).value));
      return;
    case OpKind::Linear: {
      // out = x W^T + b
      if (wants(0)) accum(pid(0), sepnet::matmul(adj, parent(1).value));
      if (wants(1)) accum(pid(1), sepnet::matmul_tn(adj, parent(0).value));
      if (wants(2)) accum(pid(2), rowsum(adj));
      return;
    }
    case OpKind::Act: {
      if (!wants(0)) return;
      const Tensor& v = parent(0).value;
      Tensor d = adj;
      real* D = d.data();
      const real* V = v.data();
      for (int64_t e = 0; e < d.numel(); ++e) D[e] *= act_g1(n.act, V[e]);
      accum(pid(0), d);
      return;
    }
    case OpKind::ActJet1: {
      // out = g'(v) d1
      const Tensor& v = parent(0).value;
      const Tensor& d1 = parent(1).value;
      const real* V = v.data();
      const real* D1 = d1.data();
      const real* A = adj.data();
      if (wants(0)) {
        Tensor d(v.shape());
        real* D = d.data();
        for (int64_t e = 0; e < d.numel(); ++e) D[e] = act_g2(n.act, V[e]) * D1[e] * A[e];
        accum(pid(0), d);
      }
      if (wants(1)) {
        Tensor d(v.shape());
        real* D = d.data();
        for (int64_t e = 0; e < d.numel(); ++e) D[e] = act_g1(n.act, V[e]) * A[e];
        accum(pid(1), d);
      }
      return;
    }
    case OpKind::ActJet2: {
      // out = g''(v) d1^2 + g'(v) d2
      // vbar  += (g'''(v) d1^2 + g''(v) d2) adj
      // d1bar += 2 g''(v) d1 adj
      // d2bar += g'(v) adj
      const Tensor& v = parent(0).value;
      const Tensor& d1 = parent(1).value;
      const Tensor& d2 = parent(2).value;
      const real* V = v.data();
      const real* D1 = d1.data();
      const real* D2 = d2.data();
      const real* A = adj.data();
      if (wants(0)) {
        Tensor d(v.shape());
        real* D = d.data();
        for (int64_t e = 0; e < d.numel(); ++e) {
          D[e] = (act_g3(n.act, V[e]) * D1[e] * D1[e] + act_g2(n.act, V[e]) * D2[e]) * A[e];
        }
        accum(pid(0), d);
      }
      if (wants(1)) {
        Tensor d(v.shape());
        real* D = d.data();
        for (int64_t e = 0; e < d.numel(); ++e) D[e] = 2 * act_g2(n.act, V[e]) * D1[e] * A[e];
        accum(pid(1), d);
      }
      if (wants(2)) {
        Tensor d(v.shape());
        real* D = d.data();
        for (int64_t e = 0; e < d.numel(); ++e) D[e] = act_g1(n.act, V[e]) * A[e];
        accum(pid(2), d);
      }
      return;
    }
    case OpKind::SepGrid: {
      const Tensor& C = parent(0).value;  // [F x r]
      const int64_t F = C.dim(0), r = C.dim(1);
      const int d = static_cast<int>(n.parents.size()) - 1;
      const int64_t cell = n.aux.dim(1);
      Tensor adj2d = reshape_copy(adj, {F, cell});

      // coeffs adjoint: dot of each function's adjoint grid with each mode grid
      if (wants(0)) accum(pid(0), sepnet::matmul_nt(adj2d, n.aux));

      bool any_factor = false;
      for (int m = 0; m < d; ++m) any_factor = any_factor || wants(m + 1);
      if (!any_factor) return;

      // T[k, I] = sum_f coeffs[f,k] adj[f,I]
      Tensor T = sepnet::matmul_tn(C, adj2d);  // [r x cell]

      std::vector<int64_t> extent(static_cast<std::size_t>(d));
      for (int m = 0; m < d; ++m) extent[static_cast<std::size_t>(m)] = parent(m + 1).value.dim(0);
      std::vector<Tensor> fbar(static_cast<std::size_t>(d));
      for (int m = 0; m < d; ++m) {
        fbar[static_cast<std::size_t>(m)] = Tensor({extent[static_cast<std::size_t>(m)], r});
      }

      std::vector<int64_t> idx(static_cast<std::size_t>(d));
      std::vector<real> fac(static_cast<std::size_t>(d));
      std::vector<real> pre(static_cast<std::size_t>(d) + 1);
      std::vector<real> suf(static_cast<std::size_t>(d) + 1);
      for (int64_t k = 0; k < r; ++k) {
        std::fill(idx.begin(), idx.end(), 0);
        const real* Tk = T.data() + k * cell;
        for (int64_t flat = 0; flat < cell; ++flat) {
          for (int m = 0; m < d; ++m) {
            fac[static_cast<std::size_t>(m)] =
                parent(m + 1).value.at(idx[static_cast<std::size_t>(m)], k);
          }
          // product of factors excluding each axis, via prefix/suffix products
          pre[0] = 1;
          for (int m = 0; m < d; ++m) pre[m + 1] = pre[m] * fac[static_cast<std::size_t>(m)];
          suf[static_cast<std::size_t>(d)] = 1;
          for (int m = d - 1; m >= 0; --m) suf[m] = suf[m + 1] * fac[static_cast<std::size_t>(m)];
          const real t = Tk[flat];
          for (int m = 0; m < d; ++m) {
            if (!wants(m + 1)) continue;
            fbar[static_cast<std::size_t>(m)].at(idx[static_cast<std::size_t>(m)], k) +=
                t * pre[m] * suf[m + 1];
          }
          // odometer: advance the last axis first (row-major flat order)
          for (int m = d - 1; m >= 0; --m) {
            if (++idx[static_cast<std::size_t>(m)] < extent[static_cast<std::size_t>(m)]) break;
            idx[static_cast<std::size_t>(m)] = 0;
          }
        }
      }
      for (int m = 0; m < d; ++m) {
        if (wants(m + 1)) accum(pid(m + 1), fbar[static_cast<std::size_t>(m)]);
      }
      return;
    }
    case OpKind::MeanSq: {
      if (!wants(0)) return;
      const Tensor& a = parent(0).value;
      const real s = adj[0] * 2 / static_cast<real>(a.numel());
      accum_scaled(pid(0), a, s);
      return;
    }
    case OpKind::Sum: {
      if (!wants(0)) return;
      accum(pid(0), Tensor::full(parent(0).value.shape(), adj[0]));
      return;
    }
  }
  throw UnsupportedError("apply_adjoint: unhandled op kind");
}

void Tape::backward(Var output, Tensor seed) {
  check_owned(output, "backward");
  const Node& out = nodes_[static_cast<std::size_t>(output.id)];
  if (!out.value.same_shape(seed)) {
    throw DimensionError("backward: seed " + shape_str(seed.shape()) + " does not match output " +
                         shape_str(out.value.shape()));
  }
  adjoints_.assign(nodes_.size(), Tensor{});
  adjoints_[static_cast<std::size_t>(output.id)] = std::move(seed);
  for (NodeId i = output.id; i >= 0; --i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad) continue;
    if (adjoints_[static_cast<std::size_t>(i)].numel() == 0) continue;
    apply_adjoint(i);
  }
  ran_backward_ = true;
}

Tensor Tape::grad(Var v) const {
  check_owned(v, "grad");
  if (!ran_backward_) throw ContractError("grad: backward() has not been run");
  const Tensor& a = adjoints_[static_cast<std::size_t>(v.id)];
  if (a.numel() == 0) return Tensor(v.value().shape());
  return a;
}

// ===== jets =================================================================

MlpVars lift(Tape& tape, const MlpParams& p) {
  check_mlp_shapes(p);
  MlpVars out;
  out.act = p.act;
  out.layers.reserve(p.layers.size());
  for (const DenseLayer& l : p.layers) {
    out.layers.emplace_back(tape.leaf(l.W), tape.leaf(l.b));
  }
  return out;
}

Jet2 jet_affine(Tape& tape, const Jet2& in, Var W, Var b) {
  Jet2 out;
  out.v = tape.linear(in.v, W, b);
  out.d1 = tape.matmul_nt(in.d1, W);
  out.d2 = tape.matmul_nt(in.d2, W);
  return out;
}

Jet2 jet_activation(Tape& tape, const Jet2& in, Activation act) {
  Jet2 out;
  out.v = tape.activation(in.v, act);
  out.d1 = tape.act_jet1(in.v, in.d1, act);
  out.d2 = tape.act_jet2(in.v, in.d1, in.d2, act);
  return out;
}

Jet2 jet_mlp_forward(Tape& tape, const MlpVars& mlp, Var x, int axis) {
  if (mlp.layers.empty()) throw ArgumentError("jet_mlp_forward: empty network");
  const Tensor& xv = x.value();
  if (xv.rank() != 2) {
    throw DimensionError("jet_mlp_forward: input must be [N x in], got " + shape_str(xv.shape()));
  }
  const int64_t in_dim = xv.dim(1);
  if (axis < 0 || axis >= in_dim) {
    throw ArgumentError("jet_mlp_forward: axis " + std::to_string(axis) + " out of range for input width " +
                        std::to_string(in_dim));
  }
  Tensor seed({xv.dim(0), in_dim});
  for (int64_t i = 0; i < xv.dim(0); ++i) seed.at(i, axis) = 1;
  // Build both seeds before the first constant(): appending a node can move
  // the tape's storage and xv points into it.
  Tensor curvature(xv.shape());
  Jet2 jet{x, tape.constant(std::move(seed)), tape.constant(std::move(curvature))};
  const std::size_t L = mlp.layers.size();
  for (std::size_t l = 0; l < L; ++l) {
    jet = jet_affine(tape, jet, mlp.layers[l].first, mlp.layers[l].second);
    if (l + 1 < L) jet = jet_activation(tape, jet, mlp.act);
  }
  return jet;
}

Jet2 jet_through_mlp(Tape& tape, const MlpVars& mlp, Var y) {
  if (mlp.layers.empty()) throw ArgumentError("jet_through_mlp: empty network");
  if (mlp.layers[0].first.value().dim(1) != 1) {
    throw ArgumentError("jet_through_mlp: network input width must be 1, got " +
                        std::to_string(mlp.layers[0].first.value().dim(1)));
  }
  return jet_mlp_forward(tape, mlp, y, 0);
}

}  // namespace sepnet::ad
