#include "sepnet/pde.hpp"

namespace sepnet {

namespace {

void require_var(ad::Var v, const char* what, const char* problem) {
  if (!v.valid()) {
    throw ArgumentError(std::string(problem) + " needs " + what + " but none was supplied");
  }
}

void require_faces(const std::vector<FieldWithDerivs>& got, std::size_t want, const char* problem) {
  if (got.size() != want) {
    throw ArgumentError(std::string(problem) + " has " + std::to_string(want) +
                        " boundary faces, got " + std::to_string(got.size()) + " field(s)");
  }
}

}  // namespace

ad::Var PdeProblem::residual(ad::Tape& tape, const FieldWithDerivs& s, ad::Var u_interior) const {
  const int t = time_axis();
  switch (kind) {
    case PdeKind::DiffusionReaction: {
      // s_t - D s_xx - k s^2 - u(x)
      require_var(u_interior, "the source term on the interior layout", name.c_str());
      ad::Var r = tape.sub(s.first(t), tape.scale(s.second(0), D));
      r = tape.sub(r, tape.scale(tape.mul(s.value, s.value), k));
      return tape.sub(r, u_interior);
    }
    case PdeKind::Advection: {
      // s_t + u(x) s_x
      require_var(u_interior, "the coefficient field on the interior layout", name.c_str());
      return tape.add(s.first(t), tape.mul(u_interior, s.first(0)));
    }
    case PdeKind::Burgers: {
      // s_t + s s_x - nu s_xx
      ad::Var r = tape.add(s.first(t), tape.mul(s.value, s.first(0)));
      return tape.sub(r, tape.scale(s.second(0), nu));
    }
    case PdeKind::Diffusion2d: {
      // s_t - alpha (s (s_xx + s_yy) + s_x^2 + s_y^2), the expanded form of
      // s_t = alpha div(s grad s).
      ad::Var lap = tape.add(s.second(0), s.second(1));
      ad::Var sq = tape.add(tape.mul(s.first(0), s.first(0)), tape.mul(s.first(1), s.first(1)));
      return tape.sub(s.first(t), tape.scale(tape.add(tape.mul(s.value, lap), sq), alpha));
    }
    case PdeKind::Heat:
      // s_t - D s_xx
      return tape.sub(s.first(t), tape.scale(s.second(0), D));
  }
  throw UnsupportedError("unknown problem kind");
}

ad::Var PdeProblem::initial_residual(ad::Tape& tape, const FieldWithDerivs& s0,
                                     ad::Var ic_target) const {
  if (kind == PdeKind::DiffusionReaction) return s0.value;  // zero initial condition
  require_var(ic_target, "initial-condition targets", name.c_str());
  return tape.sub(s0.value, ic_target);
}

std::vector<ad::Var> PdeProblem::boundary_residuals(ad::Tape& tape,
                                                    const std::vector<FieldWithDerivs>& face_fields,
                                                    ad::Var bc_target) const {
  require_faces(face_fields, faces.size(), name.c_str());
  if (kind == PdeKind::Advection) {
    // Single inflow face with a prescribed trace.
    require_var(bc_target, "inflow targets", name.c_str());
    return {tape.sub(face_fields[0].value, bc_target)};
  }
  if (periodic) {
    // Value and first-derivative mismatch between the paired faces.
    return {tape.sub(face_fields[0].value, face_fields[1].value),
            tape.sub(face_fields[0].first(0), face_fields[1].first(0))};
  }
  // Homogeneous Dirichlet: the trace itself is the violation.
  std::vector<ad::Var> out;
  out.reserve(face_fields.size());
  for (const FieldWithDerivs& f : face_fields) out.push_back(f.value);
  return out;
}

PdeProblem make_diffusion_reaction() {
  PdeProblem p;
  p.kind = PdeKind::DiffusionReaction;
  p.name = "diffusion-reaction";
  p.dim = 2;
  p.func_dim = 1;
  p.lambda_I = 1;
  p.lambda_b = 1;
  p.D = real(0.01);
  p.k = real(0.01);
  p.default_m = 128;
  p.interior_derivs = {{1, 1}, {0, 2}};
  p.faces = {{0, 0}, {0, 1}};
  return p;
}

PdeProblem make_advection() {
  PdeProblem p;
  p.kind = PdeKind::Advection;
  p.name = "advection";
  p.dim = 2;
  p.func_dim = 1;
  p.lambda_I = 100;
  p.lambda_b = 100;
  p.default_m = 128;
  p.interior_derivs = {{1, 1}, {0, 1}};
  p.faces = {{0, 0}};
  return p;
}

PdeProblem make_burgers() {
  PdeProblem p;
  p.kind = PdeKind::Burgers;
  p.name = "burgers";
  p.dim = 2;
  p.func_dim = 1;
  p.lambda_I = 20;
  p.lambda_b = 1;
  p.nu = real(0.01);
  p.default_m = 101;
  p.interior_derivs = {{1, 1}, {0, 1}, {0, 2}};
  p.boundary_derivs = {{0, 1}};
  p.faces = {{0, 0}, {0, 1}};
  p.periodic = true;
  return p;
}

PdeProblem make_diffusion_2d() {
  PdeProblem p;
  p.kind = PdeKind::Diffusion2d;
  p.name = "diffusion-2d";
  p.dim = 3;
  p.func_dim = 2;
  p.lambda_I = 20;
  p.lambda_b = 1;
  p.alpha = real(0.05);
  p.default_m = 10201;  // 101 x 101 sensor grid
  p.interior_derivs = {{2, 1}, {0, 1}, {0, 2}, {1, 1}, {1, 2}};
  p.faces = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  return p;
}

PdeProblem make_heat() {
  PdeProblem p;
  p.kind = PdeKind::Heat;
  p.name = "heat";
  p.dim = 2;
  p.func_dim = 1;
  p.lambda_I = 20;
  p.lambda_b = 1;
  p.D = real(1.0 / (kPi * kPi));
  p.default_m = 128;
  p.interior_derivs = {{1, 1}, {0, 2}};
  p.faces = {{0, 0}, {0, 1}};
  return p;
}

PdeProblem make_problem(const std::string& name) {
  if (name == "diffusion-reaction") return make_diffusion_reaction();
  if (name == "advection") return make_advection();
  if (name == "burgers") return make_burgers();
  if (name == "diffusion-2d") return make_diffusion_2d();
  if (name == "heat") return make_heat();
  throw ConfigError("unknown problem '" + name +
                    "' (expected diffusion-reaction, advection, burgers, diffusion-2d or heat)");
}

LossTerms physics_loss(ad::Tape& tape, const PdeProblem& p, const FieldWithDerivs& interior,
                       const FieldWithDerivs& initial, const std::vector<FieldWithDerivs>& boundary,
                       const PhysicsData& data) {
  ad::Var res = p.residual(tape, interior, data.u_interior);
  ad::Var init = p.initial_residual(tape, initial, data.ic_target);
  std::vector<ad::Var> bc = p.boundary_residuals(tape, boundary, data.bc_target);
  if (res.value().numel() == 0 || init.value().numel() == 0) {
    throw ArgumentError("empty collocation set for a declared loss term");
  }
  for (ad::Var g : bc) {
    if (g.value().numel() == 0) throw ArgumentError("empty boundary collocation set");
  }

  LossTerms out;
  out.residual = tape.mean_sq(res);
  out.initial = tape.mean_sq(init);
  out.boundary = tape.mean_sq(bc[0]);
  for (std::size_t g = 1; g < bc.size(); ++g) {
    out.boundary = tape.add(out.boundary, tape.mean_sq(bc[g]));
  }
  out.total = tape.add(out.residual, tape.add(tape.scale(out.initial, p.lambda_I),
                                              tape.scale(out.boundary, p.lambda_b)));
  return out;
}

}  // namespace sepnet
