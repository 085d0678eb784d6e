#include <cmath>
#include <random>

#include "doctest.h"
#include "sepnet/pde.hpp"

using namespace sepnet;

namespace {

Tensor random_tensor(std::mt19937& gen, std::vector<int64_t> shape) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = dist(gen);
  return t;
}

// Assembles a field whose value and derivative tensors are fixed data, for
// feeding manufactured solutions through the residual operators.
struct FieldBuilder {
  ad::Tape& tape;
  FieldWithDerivs f;
  explicit FieldBuilder(ad::Tape& t, int dim, Tensor value) : tape(t) {
    f.dim = dim;
    f.value = tape.constant(std::move(value));
  }
  FieldBuilder& d1(int axis, Tensor t) {
    f.d1[static_cast<std::size_t>(axis)] = tape.constant(std::move(t));
    return *this;
  }
  FieldBuilder& d2(int axis, Tensor t) {
    f.d2[static_cast<std::size_t>(axis)] = tape.constant(std::move(t));
    return *this;
  }
};

double max_abs(const Tensor& t) {
  double m = 0;
  for (int64_t i = 0; i < t.numel(); ++i) m = std::max(m, std::abs(double(t[i])));
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("pde");

TEST_CASE("factories carry the published constants") {
  PdeProblem dr = make_diffusion_reaction();
  CHECK(dr.D == doctest::Approx(0.01));
  CHECK(dr.k == doctest::Approx(0.01));
  CHECK(dr.lambda_I == 1);
  CHECK(dr.lambda_b == 1);
  CHECK(dr.dim == 2);
  CHECK(dr.default_m == 128);

  PdeProblem adv = make_advection();
  CHECK(adv.lambda_I == 100);
  CHECK(adv.lambda_b == 100);
  CHECK(adv.faces.size() == 1);

  PdeProblem bu = make_burgers();
  CHECK(bu.nu == doctest::Approx(0.01));
  CHECK(bu.lambda_I == 20);
  CHECK(bu.lambda_b == 1);
  CHECK(bu.periodic);
  CHECK(bu.default_m == 101);

  PdeProblem d2 = make_diffusion_2d();
  CHECK(d2.alpha == doctest::Approx(0.05));
  CHECK(d2.dim == 3);
  CHECK(d2.time_axis() == 2);
  CHECK(d2.faces.size() == 4);
  CHECK(d2.default_m == 10201);

  PdeProblem heat = make_heat();
  CHECK(heat.D == doctest::Approx(1.0 / (kPi * kPi)));
  CHECK(heat.lambda_I == 20);

  CHECK(make_problem("advection").name == "advection");
  CHECK_THROWS_AS(make_problem("poisson"), ConfigError);
}

TEST_CASE("diffusion-reaction residual vanishes on the zero state") {
  PdeProblem p = make_diffusion_reaction();
  ad::Tape tape;
  Tensor zero({2, 3, 4});
  FieldBuilder fb(tape, 2, zero);
  fb.d1(1, zero).d2(0, zero);
  ad::Var r = p.residual(tape, fb.f, tape.constant(zero));
  CHECK(max_abs(r.value()) == 0.0);
}

TEST_CASE("diffusion-reaction in heat mode annihilates e^{-t} sin(pi x)") {
  // With D = 1/pi^2 and k = 0 the equation is the plain heat equation, whose
  // mode-1 solution has analytic derivative fields.
  PdeProblem p = make_diffusion_reaction();
  p.D = real(1.0 / (kPi * kPi));
  p.k = 0;

  const int64_t nx = 9, nt = 7;
  Tensor xs = linspace(0, 1, nx), ts = linspace(0, 1, nt);
  Tensor v({1, nx, nt}), st({1, nx, nt}), sxx({1, nx, nt});
  for (int64_t i = 0; i < nx; ++i) {
    for (int64_t j = 0; j < nt; ++j) {
      double s = std::exp(-ts[j]) * std::sin(kPi * xs[i]);
      v[i * nt + j] = s;
      st[i * nt + j] = -s;
      sxx[i * nt + j] = -kPi * kPi * s;
    }
  }
  ad::Tape tape;
  FieldBuilder fb(tape, 2, v);
  fb.d1(1, st).d2(0, sxx);
  ad::Var r = p.residual(tape, fb.f, tape.constant(Tensor({1, nx, nt})));
  CHECK(max_abs(r.value()) < 1e-12);
}

TEST_CASE("diffusion-reaction residual matches the hand expansion for s = sin(pi x) t") {
  PdeProblem p = make_diffusion_reaction();
  const int64_t nx = 6, nt = 5;
  Tensor xs = linspace(0, 1, nx), ts = linspace(0, 1, nt);
  std::mt19937 gen(31);
  Tensor u = random_tensor(gen, {1, nx, nt});  // arbitrary source, broadcast already applied
  Tensor v({1, nx, nt}), st({1, nx, nt}), sxx({1, nx, nt});
  for (int64_t i = 0; i < nx; ++i) {
    for (int64_t j = 0; j < nt; ++j) {
      v[i * nt + j] = std::sin(kPi * xs[i]) * ts[j];
      st[i * nt + j] = std::sin(kPi * xs[i]);
      sxx[i * nt + j] = -kPi * kPi * std::sin(kPi * xs[i]) * ts[j];
    }
  }
  ad::Tape tape;
  FieldBuilder fb(tape, 2, v);
  fb.d1(1, st).d2(0, sxx);
  ad::Var r = p.residual(tape, fb.f, tape.constant(u));
  for (int64_t i = 0; i < nx; ++i) {
    for (int64_t j = 0; j < nt; ++j) {
      double sx = std::sin(kPi * xs[i]);
      double want = sx + 0.01 * kPi * kPi * ts[j] * sx - 0.01 * ts[j] * ts[j] * sx * sx -
                    u[i * nt + j];
      CHECK(r.value()[i * nt + j] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("advection residual: constants, traveling wave, and loop oracle") {
  PdeProblem p = make_advection();
  const int64_t nx = 5, nt = 6;

  ad::Tape tape;
  Tensor zero({1, nx, nt});
  FieldBuilder constant(tape, 2, Tensor::full({1, nx, nt}, 3.25));
  constant.d1(1, zero).d1(0, zero);
  ad::Var r0 = p.residual(tape, constant.f, tape.constant(Tensor::full({1, nx, nt}, 2.0)));
  CHECK(max_abs(r0.value()) == 0.0);

  // u = 1, s = sin(pi (x - t)): s_t = -pi cos(pi(x-t)), s_x = pi cos(pi(x-t)).
  Tensor xs = linspace(0, 1, nx), ts = linspace(0, 1, nt);
  Tensor v({1, nx, nt}), st({1, nx, nt}), sx({1, nx, nt});
  for (int64_t i = 0; i < nx; ++i) {
    for (int64_t j = 0; j < nt; ++j) {
      double a = kPi * (xs[i] - ts[j]);
      v[i * nt + j] = std::sin(a);
      st[i * nt + j] = -kPi * std::cos(a);
      sx[i * nt + j] = kPi * std::cos(a);
    }
  }
  FieldBuilder wave(tape, 2, v);
  wave.d1(1, st).d1(0, sx);
  ad::Var r1 = p.residual(tape, wave.f, tape.constant(Tensor::full({1, nx, nt}, 1.0)));
  CHECK(max_abs(r1.value()) < 1e-14);

  std::mt19937 gen(32);
  Tensor rv = random_tensor(gen, {2, nx, nt});
  Tensor rt = random_tensor(gen, {2, nx, nt});
  Tensor rx = random_tensor(gen, {2, nx, nt});
  Tensor ru = random_tensor(gen, {2, nx, nt});
  FieldBuilder rnd(tape, 2, rv);
  rnd.d1(1, rt).d1(0, rx);
  ad::Var r2 = p.residual(tape, rnd.f, tape.constant(ru));
  for (int64_t i = 0; i < rv.numel(); ++i) {
    CHECK(r2.value()[i] == doctest::Approx(rt[i] + ru[i] * rx[i]).epsilon(1e-13));
  }
}

TEST_CASE("burgers residual: constant state, decaying mode, loop oracle") {
  PdeProblem p = make_burgers();
  const int64_t nx = 7, nt = 4;
  ad::Tape tape;
  Tensor zero({1, nx, nt});

  FieldBuilder constant(tape, 2, Tensor::full({1, nx, nt}, -0.6));
  constant.d1(1, zero).d1(0, zero).d2(0, zero);
  CHECK(max_abs(p.residual(tape, constant.f, {}).value()) == 0.0);

  // s = e^{-nu pi^2 t} sin(pi x) kills s_t - nu s_xx; what remains is s s_x.
  Tensor xs = linspace(0, 1, nx), ts = linspace(0, 1, nt);
  Tensor v({1, nx, nt}), st({1, nx, nt}), sx({1, nx, nt}), sxx({1, nx, nt});
  for (int64_t i = 0; i < nx; ++i) {
    for (int64_t j = 0; j < nt; ++j) {
      double decay = std::exp(-p.nu * kPi * kPi * ts[j]);
      v[i * nt + j] = decay * std::sin(kPi * xs[i]);
      st[i * nt + j] = -p.nu * kPi * kPi * v[i * nt + j];
      sx[i * nt + j] = decay * kPi * std::cos(kPi * xs[i]);
      sxx[i * nt + j] = -kPi * kPi * v[i * nt + j];
    }
  }
  FieldBuilder mode(tape, 2, v);
  mode.d1(1, st).d1(0, sx).d2(0, sxx);
  ad::Var r1 = p.residual(tape, mode.f, {});
  for (int64_t i = 0; i < v.numel(); ++i) {
    CHECK(r1.value()[i] == doctest::Approx(v[i] * sx[i]).epsilon(1e-12));
  }

  std::mt19937 gen(33);
  Tensor rv = random_tensor(gen, {2, nx, nt});
  Tensor rt = random_tensor(gen, {2, nx, nt});
  Tensor rx = random_tensor(gen, {2, nx, nt});
  Tensor rxx = random_tensor(gen, {2, nx, nt});
  FieldBuilder rnd(tape, 2, rv);
  rnd.d1(1, rt).d1(0, rx).d2(0, rxx);
  ad::Var r2 = p.residual(tape, rnd.f, {});
  for (int64_t i = 0; i < rv.numel(); ++i) {
    double want = rt[i] + rv[i] * rx[i] - 0.01 * rxx[i];
    CHECK(r2.value()[i] == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("2d diffusion residual equals the product-rule expansion of div(s grad s)") {
  PdeProblem p = make_diffusion_2d();
  const std::vector<int64_t> shape{2, 3, 4, 5};
  ad::Tape tape;
  Tensor zero(shape);

  FieldBuilder zf(tape, 3, zero);
  zf.d1(2, zero).d1(0, zero).d2(0, zero).d1(1, zero).d2(1, zero);
  CHECK(max_abs(p.residual(tape, zf.f, {}).value()) == 0.0);

  FieldBuilder cf(tape, 3, Tensor::full(shape, 0.8));
  cf.d1(2, zero).d1(0, zero).d2(0, zero).d1(1, zero).d2(1, zero);
  CHECK(max_abs(p.residual(tape, cf.f, {}).value()) == 0.0);

  std::mt19937 gen(34);
  Tensor v = random_tensor(gen, shape);
  Tensor st = random_tensor(gen, shape);
  Tensor sx = random_tensor(gen, shape);
  Tensor sy = random_tensor(gen, shape);
  Tensor sxx = random_tensor(gen, shape);
  Tensor syy = random_tensor(gen, shape);
  FieldBuilder rf(tape, 3, v);
  rf.d1(2, st).d1(0, sx).d2(0, sxx).d1(1, sy).d2(1, syy);
  ad::Var r = p.residual(tape, rf.f, {});
  for (int64_t i = 0; i < v.numel(); ++i) {
    // div(s grad s) = s_x^2 + s_y^2 + s (s_xx + s_yy) by the product rule.
    double want = st[i] - 0.05 * (v[i] * (sxx[i] + syy[i]) + sx[i] * sx[i] + sy[i] * sy[i]);
    CHECK(r.value()[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("boundary residuals: Dirichlet traces, inflow target, periodic pair") {
  ad::Tape tape;
  std::mt19937 gen(35);

  PdeProblem heat = make_heat();
  Tensor f0 = random_tensor(gen, {2, 1, 5});
  Tensor f1 = random_tensor(gen, {2, 1, 5});
  FieldBuilder b0(tape, 2, f0), b1(tape, 2, f1);
  auto groups = heat.boundary_residuals(tape, {b0.f, b1.f}, {});
  REQUIRE(groups.size() == 2);
  CHECK(max_abs(sub(groups[0].value(), f0)) == 0.0);
  CHECK(max_abs(sub(groups[1].value(), f1)) == 0.0);

  PdeProblem adv = make_advection();
  Tensor target = random_tensor(gen, {2, 1, 5});
  FieldBuilder binf(tape, 2, f0);
  auto inflow = adv.boundary_residuals(tape, {binf.f}, tape.constant(target));
  REQUIRE(inflow.size() == 1);
  CHECK(max_abs(sub(inflow[0].value(), sub(f0, target))) == 0.0);

  PdeProblem bu = make_burgers();
  Tensor d0 = random_tensor(gen, {2, 1, 5});
  Tensor d1t = random_tensor(gen, {2, 1, 5});
  FieldBuilder p0(tape, 2, f0), p1(tape, 2, f1);
  p0.d1(0, d0);
  p1.d1(0, d1t);
  auto per = bu.boundary_residuals(tape, {p0.f, p1.f}, {});
  REQUIRE(per.size() == 2);
  CHECK(max_abs(sub(per[0].value(), sub(f0, f1))) == 0.0);
  CHECK(max_abs(sub(per[1].value(), sub(d0, d1t))) == 0.0);
}

TEST_CASE("physics loss on the analytic heat solution is below 1e-10") {
  // u(x) = sin(pi x) + 0.3 sin(3 pi x) propagates as
  // s = e^{-t} sin(pi x) + 0.3 e^{-9 t} sin(3 pi x); all three loss terms
  // should vanish to round-off when the exact fields are injected.
  PdeProblem p = make_heat();
  const int64_t nx = 12, nt = 10, nb = 8;
  Tensor xs = linspace(0, 1, nx), ts = linspace(0, 1, nt), tb = linspace(0, 1, nb);

  auto s_of = [](double x, double t) {
    return std::exp(-t) * std::sin(kPi * x) + 0.3 * std::exp(-9 * t) * std::sin(3 * kPi * x);
  };
  auto st_of = [](double x, double t) {
    return -std::exp(-t) * std::sin(kPi * x) - 2.7 * std::exp(-9 * t) * std::sin(3 * kPi * x);
  };
  auto sxx_of = [](double x, double t) {
    return -kPi * kPi *
           (std::exp(-t) * std::sin(kPi * x) + 2.7 * std::exp(-9 * t) * std::sin(3 * kPi * x));
  };

  ad::Tape tape;
  Tensor v({1, nx, nt}), st({1, nx, nt}), sxx({1, nx, nt});
  for (int64_t i = 0; i < nx; ++i) {
    for (int64_t j = 0; j < nt; ++j) {
      v[i * nt + j] = s_of(xs[i], ts[j]);
      st[i * nt + j] = st_of(xs[i], ts[j]);
      sxx[i * nt + j] = sxx_of(xs[i], ts[j]);
    }
  }
  FieldBuilder interior(tape, 2, v);
  interior.d1(1, st).d2(0, sxx);

  Tensor v0({1, nx, 1}), ic({1, nx, 1});
  for (int64_t i = 0; i < nx; ++i) {
    v0[i] = s_of(xs[i], 0);
    ic[i] = std::sin(kPi * xs[i]) + 0.3 * std::sin(3 * kPi * xs[i]);
  }
  FieldBuilder initial(tape, 2, v0);

  Tensor bl({1, 1, nb}), br({1, 1, nb});
  for (int64_t j = 0; j < nb; ++j) {
    bl[j] = s_of(0, tb[j]);
    br[j] = s_of(1, tb[j]);
  }
  FieldBuilder face0(tape, 2, bl), face1(tape, 2, br);

  PhysicsData data;
  data.ic_target = tape.constant(ic);
  LossTerms loss = physics_loss(tape, p, interior.f, initial.f, {face0.f, face1.f}, data);
  CHECK(loss.total.value()[0] < 1e-10);
  CHECK(loss.residual.value()[0] < 1e-25);
  CHECK(loss.initial.value()[0] < 1e-25);
  CHECK(loss.boundary.value()[0] < 1e-25);
}

TEST_CASE("loss terms combine linearly in the lambda weights") {
  PdeProblem p = make_heat();
  std::mt19937 gen(36);
  const std::vector<int64_t> in_shape{2, 4, 3}, ic_shape{2, 4, 1}, bc_shape{2, 1, 3};

  auto build = [&](ad::Tape& tape, const PdeProblem& prob, std::mt19937 g) {
    Tensor v = random_tensor(g, in_shape);
    Tensor st = random_tensor(g, in_shape);
    Tensor sxx = random_tensor(g, in_shape);
    FieldBuilder interior(tape, 2, v);
    interior.d1(1, st).d2(0, sxx);
    FieldBuilder initial(tape, 2, random_tensor(g, ic_shape));
    FieldBuilder f0(tape, 2, random_tensor(g, bc_shape));
    FieldBuilder f1(tape, 2, random_tensor(g, bc_shape));
    PhysicsData data;
    data.ic_target = tape.constant(random_tensor(g, ic_shape));
    return physics_loss(tape, prob, interior.f, initial.f, {f0.f, f1.f}, data);
  };

  ad::Tape t1, t2;
  LossTerms a = build(t1, p, gen);
  PdeProblem doubled = p;
  doubled.lambda_I *= 2;
  LossTerms b = build(t2, doubled, gen);  // same draws: gen passed by value

  CHECK(b.residual.value()[0] == a.residual.value()[0]);
  CHECK(b.boundary.value()[0] == a.boundary.value()[0]);
  CHECK(b.initial.value()[0] == a.initial.value()[0]);
  double extra_a = a.total.value()[0] - a.residual.value()[0] - p.lambda_b * a.boundary.value()[0];
  double extra_b = b.total.value()[0] - b.residual.value()[0] - p.lambda_b * b.boundary.value()[0];
  CHECK(extra_b == doctest::Approx(2 * extra_a).epsilon(1e-13));
  CHECK(a.total.value()[0] >= 0.0);
}

TEST_CASE("loss is invariant under permutations of points and functions") {
  PdeProblem p = make_heat();
  std::mt19937 gen(37);
  const int64_t F = 3, nx = 5, nt = 4;
  Tensor v = random_tensor(gen, {F, nx, nt});
  Tensor st = random_tensor(gen, {F, nx, nt});
  Tensor sxx = random_tensor(gen, {F, nx, nt});
  Tensor ic_v = random_tensor(gen, {F, nx, 1});
  Tensor ic_t = random_tensor(gen, {F, nx, 1});
  Tensor b0 = random_tensor(gen, {F, 1, nt});
  Tensor b1 = random_tensor(gen, {F, 1, nt});

  auto loss_of = [&](const std::vector<int64_t>& fperm, const std::vector<int64_t>& xperm) {
    auto permute = [&](const Tensor& t) {
      Tensor out(t.shape());
      const int64_t px = t.dim(1), pt = t.dim(2);
      for (int64_t f = 0; f < F; ++f) {
        for (int64_t i = 0; i < px; ++i) {
          for (int64_t j = 0; j < pt; ++j) {
            int64_t si = (px == nx) ? xperm[i] : i;
            out[(f * px + i) * pt + j] = t[(fperm[f] * px + si) * pt + j];
          }
        }
      }
      return out;
    };
    ad::Tape tape;
    FieldBuilder interior(tape, 2, permute(v));
    interior.d1(1, permute(st)).d2(0, permute(sxx));
    FieldBuilder initial(tape, 2, permute(ic_v));
    FieldBuilder f0(tape, 2, permute(b0));
    FieldBuilder f1(tape, 2, permute(b1));
    PhysicsData data;
    data.ic_target = tape.constant(permute(ic_t));
    return physics_loss(tape, p, interior.f, initial.f, {f0.f, f1.f}, data).total.value()[0];
  };

  double base = loss_of({0, 1, 2}, {0, 1, 2, 3, 4});
  CHECK(loss_of({2, 0, 1}, {0, 1, 2, 3, 4}) == doctest::Approx(base).epsilon(1e-13));
  CHECK(loss_of({0, 1, 2}, {4, 2, 0, 1, 3}) == doctest::Approx(base).epsilon(1e-13));
}

TEST_CASE("contract violations surface as typed errors") {
  PdeProblem p = make_diffusion_reaction();
  ad::Tape tape;
  Tensor zero({1, 3, 3});
  FieldBuilder no_derivs(tape, 2, zero);
  // Missing time derivative.
  CHECK_THROWS_AS(p.residual(tape, no_derivs.f, tape.constant(zero)), ContractError);
  // Missing source term.
  FieldBuilder full(tape, 2, zero);
  full.d1(1, zero).d2(0, zero);
  CHECK_THROWS_AS(p.residual(tape, full.f, {}), ArgumentError);

  PdeProblem heat = make_heat();
  FieldBuilder lone(tape, 2, zero);
  CHECK_THROWS_AS(heat.boundary_residuals(tape, {lone.f}, {}), ArgumentError);
  CHECK_THROWS_AS(heat.initial_residual(tape, lone.f, {}), ArgumentError);
}

TEST_SUITE_END();
