#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sepnet/autodiff.hpp"
#include "sepnet/mlp.hpp"
#include "sepnet/rng.hpp"
#include "sepnet/tensor.hpp"

namespace sepnet {

// Operator networks G(u)(y). The branch net encodes u sampled at m fixed
// sensors into r mode coefficients. The separable model keeps one
// scalar-input trunk per coordinate axis and assembles grid predictions as
// rank-r sums of outer products; the fused model feeds whole d-dimensional
// points through a single trunk and must materialize every collocation
// point.

struct SepOnetModel {
  MlpParams branch;                // tanh, m -> r
  std::vector<MlpParams> trunks;   // sine, 1 -> r, one per axis
  int64_t r = 0;
  int64_t d = 0;
  int64_t m = 0;
  uint64_t seed = 0;
};

struct DeepOnetModel {
  MlpParams branch;  // tanh, m -> r
  MlpParams trunk;   // sine, d -> r
  int64_t r = 0;
  int64_t d = 0;
  int64_t m = 0;
  uint64_t seed = 0;
};

using ModelVariant = std::variant<SepOnetModel, DeepOnetModel>;

// One derivative request: d^order / d y_axis^order, order in {1, 2}.
struct DerivReq {
  int axis = 0;
  int order = 1;
};

inline constexpr int kMaxAxes = 3;

// Prediction field plus whichever coordinate derivatives were requested.
// All tensors share the same shape ([F x N_1 x ... x N_d] on grids,
// [F x P] on point sets).
struct FieldWithDerivs {
  ad::Var value;
  std::array<std::optional<ad::Var>, kMaxAxes> d1;
  std::array<std::optional<ad::Var>, kMaxAxes> d2;
  int dim = 0;

  const ad::Var& first(int axis) const;
  const ad::Var& second(int axis) const;
};

// ===== forward passes =======================================================

// Pure evaluation, no tape.
Tensor mlp_forward(const MlpParams& p, const Tensor& x);
// Recorded evaluation.
ad::Var mlp_forward(ad::Tape& tape, const ad::MlpVars& p, ad::Var x);

struct SepOnetVars {
  ad::MlpVars branch;
  std::vector<ad::MlpVars> trunks;
};
struct DeepOnetVars {
  ad::MlpVars branch;
  ad::MlpVars trunk;
};
SepOnetVars lift(ad::Tape& tape, const SepOnetModel& m);
DeepOnetVars lift(ad::Tape& tape, const DeepOnetModel& m);

// u_sensors [F x m], axes[n] holds the N_n coordinates of axis n.
// Result [F x N_1 x ... x N_d].
Tensor seponet_forward(const SepOnetModel& m, const Tensor& u_sensors,
                       const std::vector<Tensor>& axes);
ad::Var seponet_forward(ad::Tape& tape, const SepOnetVars& v, const Tensor& u_sensors,
                        const std::vector<Tensor>& axes);
FieldWithDerivs seponet_field_with_derivs(ad::Tape& tape, const SepOnetVars& v,
                                          const Tensor& u_sensors,
                                          const std::vector<Tensor>& axes,
                                          const std::vector<DerivReq>& needed);

// points [P x d]. Result [F x P].
Tensor deeponet_forward(const DeepOnetModel& m, const Tensor& u_sensors, const Tensor& points);
FieldWithDerivs deeponet_field_with_derivs(ad::Tape& tape, const DeepOnetVars& v,
                                           const Tensor& u_sensors, const Tensor& points,
                                           const std::vector<DerivReq>& needed);

// ===== initialization =======================================================

// Glorot-uniform for tanh nets. Sine nets get U(-1/in, 1/in) on the first
// layer and U(-sqrt(6/in), sqrt(6/in)) afterwards. Biases start at zero.
// depth counts affine layers, so depth 1 is a plain linear map.
MlpParams init_mlp(Rng& rng, int64_t in, int64_t width, int64_t depth, int64_t out,
                   Activation act);
SepOnetModel init_seponet(uint64_t seed, int64_t m, int64_t d, int64_t r, int64_t width,
                          int64_t depth);
DeepOnetModel init_deeponet(uint64_t seed, int64_t m, int64_t d, int64_t r, int64_t width,
                            int64_t depth);

// ===== serialization ========================================================
// Single file: magic "SEPM", u64 little-endian header length, JSON header
// (kind, r, d, m, seed, per-net widths and activations), then raw
// little-endian f64 blocks, branch layers first, trunks in axis order,
// W before b within a layer. Optional extra state blocks (optimizer moments)
// follow the parameters and are described by the meta map.

// Canonical flattening order used by serialization and the optimizer.
std::vector<const Tensor*> param_blocks(const ModelVariant& m);
std::vector<Tensor*> param_blocks(ModelVariant& m);
std::vector<std::string> param_names(const ModelVariant& m);

void save_model(const std::string& path, const ModelVariant& m);
ModelVariant load_model(const std::string& path);
void save_model_with_state(const std::string& path, const ModelVariant& m,
                           const std::map<std::string, std::string>& meta,
                           const std::vector<Tensor>& state_blocks);
ModelVariant load_model_with_state(const std::string& path,
                                   std::map<std::string, std::string>* meta,
                                   std::vector<Tensor>* state_blocks);

}  // namespace sepnet
