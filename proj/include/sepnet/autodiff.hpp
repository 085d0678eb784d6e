#pragma once

#include <cstdint>
#include <vector>

#include "sepnet/mlp.hpp"
#include "sepnet/tensor.hpp"

// Reverse-mode tape over tensor operations, plus forward-mode order-2 jets
// for derivatives with respect to network inputs. Jet components live on the
// tape as ordinary nodes, so reverse mode differentiates through them and
// physics losses built from input derivatives get exact parameter gradients.
//
// A tape is confined to one thread. Nodes refer to earlier nodes only, so
// reverse creation order is a valid topological order and backward() visits
// each node exactly once.

namespace sepnet::ad {

using NodeId = int32_t;

class Tape;

struct Var {
  Tape* tape = nullptr;
  NodeId id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  const std::vector<int64_t>& shape() const;
};

enum class OpKind : uint8_t {
  Leaf,
  Constant,
  Add,
  Sub,
  Mul,
  Scale,
  Matmul,
  MatmulNT,
  Linear,
  Act,
  ActJet1,
  ActJet2,
  SepGrid,
  MeanSq,
  Sum,
};

class Tape {
 public:
  // Differentiable input (parameter). grad() is defined after backward().
  Var leaf(Tensor v);
  // Data: no adjoint is ever propagated into it.
  Var constant(Tensor v);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, real c);
  Var matmul(Var a, Var b);     // [m x k][k x n]
  Var matmul_nt(Var a, Var b);  // [m x k][n x k] -> a b^T
  // x [B x in], W [out x in], b [out] -> x W^T + b (bias broadcast on rows)
  Var linear(Var x, Var W, Var b);
  Var activation(Var v, Activation act);
  // First/second jet components through an elementwise activation:
  //   act_jet1 = g'(v) . d1
  //   act_jet2 = g''(v) . d1^2 + g'(v) . d2
  Var act_jet1(Var v, Var d1, Activation act);
  Var act_jet2(Var v, Var d1, Var d2, Activation act);
  // coeffs [F x r], axis factor n of shape [N_n x r]:
  //   out[f, i_1..i_d] = sum_k coeffs[f,k] prod_n factors[n][i_n, k]
  // Mode grids are assembled with outer_product_chain and combined with
  // reduce_modes; the mode stack is cached for the adjoint.
  Var separable_grid(Var coeffs, const std::vector<Var>& factors);
  Var mean_sq(Var a);  // scalar (1/numel) sum a^2
  Var sum(Var a);      // scalar

  // Seeds the output adjoint and accumulates adjoints for every node that
  // needs one, in reverse creation order. Seed shape must match the output.
  void backward(Var output, Tensor seed);
  // Adjoint of v from the last backward(); zeros if v was not reached.
  Tensor grad(Var v) const;

  const Tensor& value_of(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  // Drops all nodes but keeps buffer capacity; invalidates outstanding Vars.
  void reset();

 private:
  struct Node {
    OpKind kind;
    Activation act = Activation::Tanh;
    real c = 0;
    bool needs_grad = false;
    std::vector<NodeId> parents;
    Tensor value;
    Tensor aux;  // SepGrid: cached mode stack [r x cell]
  };

  Var record(Node&& n);
  void check_owned(Var v, const char* op) const;
  bool any_needs_grad(const std::vector<NodeId>& parents) const;
  void accum(NodeId p, const Tensor& delta);
  void accum_scaled(NodeId p, const Tensor& delta, real c);
  void apply_adjoint(NodeId i);

  std::vector<Node> nodes_;
  std::vector<Tensor> adjoints_;
  bool ran_backward_ = false;
};

// ===== jets =================================================================

// Value plus raw first/second derivatives with respect to one scalar
// coordinate (not Taylor-normalized).
struct Jet2 {
  Var v;
  Var d1;
  Var d2;
};

struct MlpVars {
  std::vector<std::pair<Var, Var>> layers;  // (W, b)
  Activation act = Activation::Tanh;
};

// Registers every weight and bias as a leaf on the tape.
MlpVars lift(Tape& tape, const MlpParams& p);

// One affine layer applied to a jet: (W v + b, W d1, W d2).
Jet2 jet_affine(Tape& tape, const Jet2& in, Var W, Var b);
// Elementwise activation by Faa di Bruno through order 2.
Jet2 jet_activation(Tape& tape, const Jet2& in, Activation act);

// Full network pass seeded along one input coordinate: d1 = e_axis, d2 = 0.
// x is [N x in]; returns [N x out] components.
Jet2 jet_mlp_forward(Tape& tape, const MlpVars& mlp, Var x, int axis);
// Scalar-input convenience used by the per-axis trunks; requires in == 1.
Jet2 jet_through_mlp(Tape& tape, const MlpVars& mlp, Var y);

}  // namespace sepnet::ad
