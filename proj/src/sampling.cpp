#include "sepnet/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "json.hpp"

namespace sepnet {

using json = nlohmann::json;

namespace {

constexpr real kJitter = real(1e-10);

void check_sensors_1d(const Tensor& sensors, const char* op) {
  if (sensors.rank() != 1 || sensors.numel() < 2) {
    throw ArgumentError(std::string(op) + ": sensors must be a rank-1 vector of 2+ locations");
  }
}

std::string describe(const char* kind, Rng& rng, json extra) {
  extra["kind"] = kind;
  extra["seed"] = rng.seed();
  extra["stream"] = rng.stream();
  extra["counter"] = rng.counter();
  return extra.dump();
}

// Attempts the factorization in place; returns false on a non-positive pivot.
bool try_cholesky(Tensor& a) {
  const int64_t n = a.dim(0);
  for (int64_t j = 0; j < n; ++j) {
    real d = a.at(j, j);
    for (int64_t k = 0; k < j; ++k) d -= a.at(j, k) * a.at(j, k);
    if (!(d > 0)) return false;
    d = std::sqrt(d);
    a.at(j, j) = d;
    for (int64_t i = j + 1; i < n; ++i) {
      real s = a.at(i, j);
      for (int64_t k = 0; k < j; ++k) s -= a.at(i, k) * a.at(j, k);
      a.at(i, j) = s / d;
    }
    for (int64_t i = 0; i < j; ++i) a.at(i, j) = 0;
  }
  return true;
}

bool shifted_is_pd(const Tensor& K, real shift) {
  Tensor a = K;
  for (int64_t i = 0; i < a.dim(0); ++i) a.at(i, i) += shift;
  return try_cholesky(a);
}

// Smallest eigenvalue located by bisection on the shift that makes K + sI
// factorizable. Only runs on the error path.
real min_eig_estimate(const Tensor& K) {
  real hi = 1;
  while (!shifted_is_pd(K, hi)) hi *= 2;
  real lo = 0;
  for (int iter = 0; iter < 80 && hi - lo > 1e-12 * hi; ++iter) {
    real mid = (lo + hi) / 2;
    (shifted_is_pd(K, mid) ? hi : lo) = mid;
  }
  return -hi;
}

}  // namespace

Tensor cholesky_lower(const Tensor& K) {
  if (K.rank() != 2 || K.dim(0) != K.dim(1)) {
    throw DimensionError("cholesky_lower expects a square matrix, got " + shape_str(K.shape()));
  }
  Tensor a = K;
  if (!try_cholesky(a)) {
    throw NumericError("matrix is not positive definite (min eigenvalue ~ " +
                       std::to_string(static_cast<double>(min_eig_estimate(K))) + ")");
  }
  return a;
}

Tensor rbf_kernel(const Tensor& xs, real length_scale, real variance) {
  if (xs.rank() != 1) {
    throw DimensionError("rbf_kernel expects rank-1 locations, got " + shape_str(xs.shape()));
  }
  if (!(length_scale > 0) || !(variance > 0)) {
    throw ArgumentError("rbf_kernel wants positive length scale and variance");
  }
  const int64_t n = xs.numel();
  Tensor K({n, n});
  const real inv_two_ls2 = 1 / (2 * length_scale * length_scale);
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      const real d = xs[i] - xs[j];
      K.at(i, j) = variance * std::exp(-d * d * inv_two_ls2);
    }
  }
  return K;
}

JointDraw sample_grf_rbf_joint(Rng& rng, int64_t n_funcs, const Tensor& sensors,
                               const Tensor& extra, real length_scale, real variance) {
  check_sensors_1d(sensors, "sample_grf_rbf_joint");
  if (n_funcs < 1) throw ArgumentError("need at least one function");

  // Merge coincident locations so the joint kernel stays well conditioned.
  std::vector<real> unique;
  std::unordered_map<real, int64_t> where;
  std::vector<int64_t> slot(static_cast<std::size_t>(sensors.numel() + extra.numel()));
  auto place = [&](real x, std::size_t pos) {
    auto it = where.find(x);
    if (it == where.end()) {
      it = where.emplace(x, static_cast<int64_t>(unique.size())).first;
      unique.push_back(x);
    }
    slot[pos] = it->second;
  };
  for (int64_t i = 0; i < sensors.numel(); ++i) place(sensors[i], static_cast<std::size_t>(i));
  for (int64_t i = 0; i < extra.numel(); ++i) {
    place(extra[i], static_cast<std::size_t>(sensors.numel() + i));
  }

  const int64_t n = static_cast<int64_t>(unique.size());
  Tensor pts({n}, std::vector<real>(unique.begin(), unique.end()));
  Tensor K = rbf_kernel(pts, length_scale, variance);
  for (int64_t i = 0; i < n; ++i) K.at(i, i) += kJitter;
  Tensor L = cholesky_lower(K);

  JointDraw out;
  out.batch.kind = InputKind::GrfRbf;
  out.batch.descriptor = describe("grf-rbf", rng,
                                  {{"length_scale", length_scale}, {"variance", variance}});
  out.batch.at_sensors = Tensor({n_funcs, sensors.numel()});
  out.at_extra = Tensor({n_funcs, extra.numel()});
  std::vector<real> z(static_cast<std::size_t>(n)), v(static_cast<std::size_t>(n));
  for (int64_t f = 0; f < n_funcs; ++f) {
    for (int64_t i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = static_cast<real>(rng.normal());
    for (int64_t i = 0; i < n; ++i) {
      real acc = 0;
      for (int64_t k = 0; k <= i; ++k) acc += L.at(i, k) * z[static_cast<std::size_t>(k)];
      v[static_cast<std::size_t>(i)] = acc;
    }
    for (int64_t i = 0; i < sensors.numel(); ++i) {
      out.batch.at_sensors.at(f, i) = v[static_cast<std::size_t>(slot[static_cast<std::size_t>(i)])];
    }
    for (int64_t i = 0; i < extra.numel(); ++i) {
      out.at_extra.at(f, i) =
          v[static_cast<std::size_t>(slot[static_cast<std::size_t>(sensors.numel() + i)])];
    }
  }
  return out;
}

FunctionBatch sample_grf_rbf(Rng& rng, int64_t n_funcs, const Tensor& sensors, real length_scale,
                             real variance) {
  return sample_grf_rbf_joint(rng, n_funcs, sensors, Tensor({0}), length_scale, variance).batch;
}

JointDraw sample_advection_coeff_joint(Rng& rng, int64_t n_funcs, const Tensor& sensors,
                                       const Tensor& extra) {
  JointDraw d = sample_grf_rbf_joint(rng, n_funcs, sensors, extra);
  d.batch.kind = InputKind::AdvectionCoeff;
  // Shift each function by its sensor minimum so coefficients stay positive.
  // Evaluating (v - min) + 1 elementwise makes the sensor minimum land on 1
  // exactly: the argmin maps to (mn - mn) + 1 = 1 and rounding is monotone.
  // The same per-function minimum is subtracted at the extra locations.
  for (int64_t f = 0; f < n_funcs; ++f) {
    real mn = d.batch.at_sensors.at(f, 0);
    for (int64_t i = 1; i < sensors.numel(); ++i) {
      mn = std::min(mn, d.batch.at_sensors.at(f, i));
    }
    for (int64_t i = 0; i < sensors.numel(); ++i) {
      d.batch.at_sensors.at(f, i) = (d.batch.at_sensors.at(f, i) - mn) + 1;
    }
    for (int64_t i = 0; i < extra.numel(); ++i) {
      d.at_extra.at(f, i) = (d.at_extra.at(f, i) - mn) + 1;
    }
  }
  json desc = json::parse(d.batch.descriptor);
  desc["kind"] = "advection-coeff";
  d.batch.descriptor = desc.dump();
  return d;
}

FunctionBatch sample_advection_coeff(Rng& rng, int64_t n_funcs, const Tensor& sensors) {
  return sample_advection_coeff_joint(rng, n_funcs, sensors, Tensor({0})).batch;
}

namespace {

// Spectral synthesis shared by eval_1d and the samplers' sensor fill.
Tensor spectral_eval(const FunctionBatch& b, const Tensor& xs) {
  const int64_t F = b.cos_coeffs.numel() ? b.cos_coeffs.dim(0) : b.sin_coeffs.dim(0);
  const int64_t J = b.sin_coeffs.dim(1);
  Tensor out({F, xs.numel()});
  const bool periodic = b.kind == InputKind::PeriodicSpectral;
  for (int64_t f = 0; f < F; ++f) {
    for (int64_t i = 0; i < xs.numel(); ++i) {
      real acc = 0;
      for (int64_t j = 0; j < J; ++j) {
        const real w = periodic ? 2 * static_cast<real>(kPi) * static_cast<real>(j + 1)
                                : static_cast<real>(kPi) * static_cast<real>(j + 1);
        const real a = w * xs[i];
        if (periodic) acc += b.cos_coeffs.at(f, j) * std::cos(a);
        acc += b.sin_coeffs.at(f, j) * std::sin(a);
      }
      out.at(f, i) = acc;
    }
  }
  return out;
}

}  // namespace

Tensor FunctionBatch::eval_1d(const Tensor& xs) const {
  if (kind != InputKind::PeriodicSpectral && kind != InputKind::DirichletSpectral) {
    throw ContractError("eval_1d needs a spectral function batch");
  }
  return spectral_eval(*this, xs);
}

FunctionBatch sample_periodic_grf(Rng& rng, int64_t n_funcs, const Tensor& sensors) {
  check_sensors_1d(sensors, "sample_periodic_grf");
  const int64_t J = sensors.numel() / 2;
  FunctionBatch b;
  b.kind = InputKind::PeriodicSpectral;
  b.descriptor = describe("periodic-spectral", rng, {{"modes", J}});
  b.cos_coeffs = Tensor({n_funcs, J});
  b.sin_coeffs = Tensor({n_funcs, J});
  for (int64_t f = 0; f < n_funcs; ++f) {
    for (int64_t j = 0; j < J; ++j) {
      const real w = 2 * static_cast<real>(kPi) * static_cast<real>(j + 1);
      const real sd = 25 / ((w * w + 25) * (w * w + 25));
      b.cos_coeffs.at(f, j) = sd * static_cast<real>(rng.normal());
      b.sin_coeffs.at(f, j) = sd * static_cast<real>(rng.normal());
    }
  }
  b.at_sensors = spectral_eval(b, sensors);
  return b;
}

FunctionBatch sample_dirichlet_grf(Rng& rng, int64_t n_funcs, const Tensor& sensors) {
  check_sensors_1d(sensors, "sample_dirichlet_grf");
  const int64_t K = sensors.numel() / 2;
  FunctionBatch b;
  b.kind = InputKind::DirichletSpectral;
  b.descriptor = describe("dirichlet-spectral", rng, {{"modes", K}});
  b.cos_coeffs = Tensor({n_funcs, 0});
  b.sin_coeffs = Tensor({n_funcs, K});
  for (int64_t f = 0; f < n_funcs; ++f) {
    for (int64_t k = 0; k < K; ++k) {
      const real w = static_cast<real>(kPi) * static_cast<real>(k + 1);
      const real sd = 25 / ((w * w + 25) * (w * w + 25));
      b.sin_coeffs.at(f, k) = sd * static_cast<real>(rng.normal());
    }
  }
  b.at_sensors = spectral_eval(b, sensors);
  return b;
}

Tensor FunctionBatch::eval_2d_points(const Tensor& pts) const {
  if (kind != InputKind::GaussianSum2d) {
    throw ContractError("eval_2d_points needs a gaussian-sum batch");
  }
  if (pts.rank() != 2 || pts.dim(1) != 2) {
    throw DimensionError("points must be [P x 2], got " + shape_str(pts.shape()));
  }
  const int64_t F = bump_params.dim(0);
  Tensor out({F, pts.dim(0)});
  for (int64_t f = 0; f < F; ++f) {
    for (int64_t p = 0; p < pts.dim(0); ++p) {
      real acc = 0;
      for (int64_t g = 0; g < 3; ++g) {
        const real A = bump_params.at(f, 4 * g);
        const real w = bump_params.at(f, 4 * g + 1);
        const real dx = pts.at(p, 0) - bump_params.at(f, 4 * g + 2);
        const real dy = pts.at(p, 1) - bump_params.at(f, 4 * g + 3);
        acc += A * std::exp(-w * (dx * dx + dy * dy));
      }
      out.at(f, p) = acc;
    }
  }
  return out;
}

Tensor FunctionBatch::eval_2d_grid(const Tensor& xs, const Tensor& ys) const {
  Tensor flat = eval_2d_points(meshgrid_points({xs, ys}));
  return Tensor({flat.dim(0), xs.numel(), ys.numel()},
                std::vector<real>(flat.data(), flat.data() + flat.numel()));
}

FunctionBatch sample_gaussian_sum_2d(Rng& rng, int64_t n_funcs, const Tensor& xs,
                                     const Tensor& ys) {
  FunctionBatch b;
  b.kind = InputKind::GaussianSum2d;
  b.descriptor = describe("gaussian-sum-2d", rng, {{"bumps", 3}});
  b.bump_params = Tensor({n_funcs, 12});
  for (int64_t f = 0; f < n_funcs; ++f) {
    for (int64_t g = 0; g < 3; ++g) {
      b.bump_params.at(f, 4 * g) = static_cast<real>(rng.uniform(0.2, 0.5));
      b.bump_params.at(f, 4 * g + 1) = static_cast<real>(rng.uniform(10, 20));
      b.bump_params.at(f, 4 * g + 2) = static_cast<real>(rng.uniform(-0.5, 0.5));
      b.bump_params.at(f, 4 * g + 3) = static_cast<real>(rng.uniform(-0.5, 0.5));
    }
  }
  Tensor grid = b.eval_2d_grid(xs, ys);
  b.at_sensors = Tensor({n_funcs, xs.numel() * ys.numel()},
                        std::vector<real>(grid.data(), grid.data() + grid.numel()));
  return b;
}

CollocationSet collocation_axes(Rng& rng, const PdeProblem& p, int64_t N) {
  if (N < 2) throw ArgumentError("collocation wants N >= 2, got " + std::to_string(N));
  CollocationSet out;
  out.interior_axes.reserve(static_cast<std::size_t>(p.dim));
  for (int n = 0; n < p.dim; ++n) {
    Tensor axis({N});
    for (int64_t i = 0; i < N; ++i) axis[i] = static_cast<real>(rng.uniform());
    std::sort(axis.data(), axis.data() + N);
    out.interior_axes.push_back(std::move(axis));
  }
  // Initial set: deterministic spatial grid at t = 0.
  for (int n = 0; n + 1 < p.dim; ++n) out.initial_axes.push_back(linspace(0, 1, N));
  out.initial_axes.push_back(Tensor({1}));
  // One endpoint-included grid per varying axis of each face.
  for (const Face& face : p.faces) {
    std::vector<Tensor> axes;
    for (int n = 0; n < p.dim; ++n) {
      if (n == face.axis) {
        axes.push_back(Tensor({1}, {face.where}));
      } else {
        axes.push_back(linspace(0, 1, N));
      }
    }
    out.face_axes.push_back(std::move(axes));
  }
  return out;
}

Tensor sensor_locations_1d(int64_t m) { return linspace(0, 1, m); }

void sensor_grid_2d(int64_t m, Tensor& xs, Tensor& ys) {
  const auto side = static_cast<int64_t>(std::llround(std::sqrt(static_cast<double>(m))));
  if (side * side != m) {
    throw ArgumentError("2d sensor count must be a perfect square, got " + std::to_string(m));
  }
  xs = linspace(0, 1, side);
  ys = linspace(0, 1, side);
}

}  // namespace sepnet
