#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sepnet/autodiff.hpp"
#include "sepnet/nets.hpp"

namespace sepnet {

inline constexpr double kPi = 3.14159265358979323846;

// Benchmark problems as residual/initial/boundary operators over prediction
// fields. Coordinate convention throughout: spatial axes first, time last,
// every axis on [0, 1]. Residuals are recorded on the tape so the physics
// loss is differentiable end to end.

enum class PdeKind { DiffusionReaction, Advection, Burgers, Diffusion2d, Heat };

// One spatial boundary face: coordinate `axis` pinned to `where`.
struct Face {
  int axis = 0;
  real where = 0;
};

// Problem-specific data entering the loss terms, pre-evaluated by the caller
// at the collocation layout in use (grid or point list) so every residual is
// a plain elementwise expression. Unused slots stay invalid.
struct PhysicsData {
  ad::Var u_interior;  // input function on the interior layout (source/coefficient)
  ad::Var ic_target;   // target values for s(., 0)
  ad::Var bc_target;   // inflow target on the single Dirichlet face (advection)
};

struct LossTerms {
  ad::Var total;
  ad::Var residual;
  ad::Var initial;
  ad::Var boundary;
};

struct PdeProblem {
  PdeKind kind = PdeKind::Heat;
  std::string name;
  int dim = 2;       // coordinate axes including time
  int func_dim = 1;  // arity of the input function (1 for u(x), 2 for u(x,y))
  real lambda_I = 1;
  real lambda_b = 1;
  // Equation constants; only the ones the residual uses are nonzero.
  real D = 0;
  real k = 0;
  real nu = 0;
  real alpha = 0;
  int64_t default_m = 128;  // sensor count at paper scale

  std::vector<DerivReq> interior_derivs;
  std::vector<DerivReq> boundary_derivs;
  std::vector<Face> faces;
  bool periodic = false;  // faces form matching pairs instead of Dirichlet conditions

  int time_axis() const { return dim - 1; }

  // PDE residual on the interior layout. u_interior is required by
  // diffusion-reaction (source term) and advection (coefficient).
  ad::Var residual(ad::Tape& tape, const FieldWithDerivs& s, ad::Var u_interior) const;
  // s(., 0) residual; ic_target required except for the zero-IC problem.
  ad::Var initial_residual(ad::Tape& tape, const FieldWithDerivs& s0, ad::Var ic_target) const;
  // One residual tensor per boundary condition. face_fields aligns with
  // `faces`; periodic problems consume faces pairwise.
  std::vector<ad::Var> boundary_residuals(ad::Tape& tape,
                                          const std::vector<FieldWithDerivs>& face_fields,
                                          ad::Var bc_target) const;
};

// Factories with the published constants and loss weights.
PdeProblem make_diffusion_reaction();  // s_t = D s_xx + k s^2 + u(x), zero IC/BC
PdeProblem make_advection();           // s_t + u(x) s_x = 0, inflow BC
PdeProblem make_burgers();             // s_t + s s_x = nu s_xx, periodic
PdeProblem make_diffusion_2d();        // s_t = alpha div(s grad s), zero BC
PdeProblem make_heat();                // s_t = (1/pi^2) s_xx, zero BC
// CLI names: diffusion-reaction | advection | burgers | diffusion-2d | heat.
PdeProblem make_problem(const std::string& name);

// Advection data functions, shared with the reference solver.
inline real advection_initial(real x) { return std::sin(static_cast<real>(kPi) * x); }
inline real advection_inflow(real t) { return std::sin(static_cast<real>(kPi) * t / 2); }

// Mean-of-squares loss assembly: total = residual + lambda_I * initial +
// lambda_b * boundary, boundary summed over condition groups.
LossTerms physics_loss(ad::Tape& tape, const PdeProblem& p, const FieldWithDerivs& interior,
                       const FieldWithDerivs& initial, const std::vector<FieldWithDerivs>& boundary,
                       const PhysicsData& data);

}  // namespace sepnet
