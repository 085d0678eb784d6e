#include "sepnet/refsolve.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "json.hpp"
#include "sepnet/pde.hpp"

namespace sepnet {

using json = nlohmann::json;

namespace {

constexpr double kBlowup = 1e6;

void check_axis_counts(int64_t nx, int64_t nt, const char* op) {
  if (nx < 3 || nt < 2) {
    throw ConfigError(std::string(op) + " wants nx >= 3 and nt >= 2, got " +
                      std::to_string(nx) + " x " + std::to_string(nt));
  }
}

void check_samples(const Tensor& u, int64_t want, const char* what) {
  if (u.rank() != 1 || u.numel() != want) {
    throw DimensionError(std::string(what) + " must be sampled at the " +
                         std::to_string(want) + " solver nodes, got " + shape_str(u.shape()));
  }
}

// Solves the tridiagonal system (a, b, c) x = r for indices lo..hi in place.
void thomas_solve(std::vector<double>& a, std::vector<double>& b, std::vector<double>& c,
                  std::vector<double>& r, int64_t lo, int64_t hi) {
  for (int64_t i = lo + 1; i <= hi; ++i) {
    const double w = a[static_cast<std::size_t>(i)] / b[static_cast<std::size_t>(i - 1)];
    b[static_cast<std::size_t>(i)] -= w * c[static_cast<std::size_t>(i - 1)];
    r[static_cast<std::size_t>(i)] -= w * r[static_cast<std::size_t>(i - 1)];
  }
  r[static_cast<std::size_t>(hi)] /= b[static_cast<std::size_t>(hi)];
  for (int64_t i = hi - 1; i >= lo; --i) {
    r[static_cast<std::size_t>(i)] =
        (r[static_cast<std::size_t>(i)] -
         c[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i + 1)]) /
        b[static_cast<std::size_t>(i)];
  }
}

// NaN-aware: a state containing NaN must count as diverged, and NaN falls
// through std::max comparisons.
bool diverged(const std::vector<double>& v) {
  for (double x : v) {
    if (!(std::abs(x) <= kBlowup)) return true;
  }
  return false;
}

}  // namespace

HeatSeries heat_series(const Tensor& u_sensors, int64_t K) {
  if (u_sensors.rank() != 1 || u_sensors.numel() < 4) {
    throw DimensionError("heat_series wants u on 4+ equispaced sensors, got " +
                         shape_str(u_sensors.shape()));
  }
  if (K < 1) throw ArgumentError("heat_series wants K >= 1, got " + std::to_string(K));
  const int64_t m = u_sensors.numel();
  const int64_t intervals = m - 1;
  // Mode m-1 samples to zero on this grid and higher modes alias, so the
  // distinguishable band ends at m-2.
  const int64_t cap = m - 2;
  HeatSeries out;
  out.truncated = K > cap;
  out.rank = std::min(K, cap);
  out.coefficients = Tensor({out.rank});
  const double h = 1.0 / static_cast<double>(intervals);
  for (int64_t k = 1; k <= out.rank; ++k) {
    double acc = 0;  // endpoints drop: sin(0) = sin(k pi) = 0
    for (int64_t i = 1; i < intervals; ++i) {
      acc += std::sin(kPi * static_cast<double>(k) * static_cast<double>(i) * h) *
             static_cast<double>(u_sensors[i]);
    }
    out.coefficients[k - 1] = static_cast<real>(2 * h * acc);
  }
  return out;
}

GridSolution heat_analytic(const Tensor& u_sensors, int64_t K, const Tensor& xs,
                           const Tensor& ts) {
  if (xs.rank() != 1 || ts.rank() != 1 || xs.numel() < 1 || ts.numel() < 1) {
    throw DimensionError("heat_analytic wants rank-1 x and t axes");
  }
  HeatSeries series = heat_series(u_sensors, K);
  const int64_t nx = xs.numel(), nt = ts.numel(), R = series.rank;

  // Tabulate the separated factors once; the series is itself a rank-R
  // separated field.
  std::vector<double> sine(static_cast<std::size_t>(R * nx));
  std::vector<double> decay(static_cast<std::size_t>(R * nt));
  for (int64_t k = 0; k < R; ++k) {
    const double kk = static_cast<double>(k + 1);
    for (int64_t i = 0; i < nx; ++i) {
      sine[static_cast<std::size_t>(k * nx + i)] = std::sin(kPi * kk * static_cast<double>(xs[i]));
    }
    for (int64_t j = 0; j < nt; ++j) {
      decay[static_cast<std::size_t>(k * nt + j)] = std::exp(-kk * kk * static_cast<double>(ts[j]));
    }
  }

  GridSolution out;
  out.axes = {xs, ts};
  out.values = Tensor({nx, nt});
  for (int64_t i = 0; i < nx; ++i) {
    for (int64_t j = 0; j < nt; ++j) {
      double acc = 0;
      for (int64_t k = 0; k < R; ++k) {
        acc += static_cast<double>(series.coefficients[k]) *
               sine[static_cast<std::size_t>(k * nx + i)] *
               decay[static_cast<std::size_t>(k * nt + j)];
      }
      out.values.at(i, j) = static_cast<real>(acc);
    }
  }
  out.descriptor = json{{"scheme", "sine-series"},
                        {"quadrature", "trapezoid"},
                        {"modes", series.rank},
                        {"requested", K},
                        {"truncated", series.truncated}}
                       .dump();
  return out;
}

GridSolution solve_diffusion_reaction(const Tensor& u_grid, const DiffusionReactionConfig& cfg) {
  check_axis_counts(cfg.nx, cfg.nt, "solve_diffusion_reaction");
  check_samples(u_grid, cfg.nx, "forcing");
  if (cfg.initial.numel()) check_samples(cfg.initial, cfg.nx, "initial state");
  const int64_t nx = cfg.nx, nt = cfg.nt;
  const double h = 1.0 / static_cast<double>(nx - 1);
  const double dt = 1.0 / static_cast<double>(nt - 1);
  const double D = static_cast<double>(cfg.diffusivity);
  const double k = static_cast<double>(cfg.reaction);
  const double mu = D * dt / (2 * h * h);

  std::vector<double> s(static_cast<std::size_t>(nx), 0.0);
  if (cfg.initial.numel()) {
    for (int64_t i = 0; i < nx; ++i) s[static_cast<std::size_t>(i)] = cfg.initial[i];
  }
  std::vector<double> prev = s;  // extrapolation state; first step lags plainly
  std::vector<double> a(static_cast<std::size_t>(nx)), b(static_cast<std::size_t>(nx)),
      c(static_cast<std::size_t>(nx)), r(static_cast<std::size_t>(nx));

  GridSolution out;
  out.axes = {linspace(0, 1, nx), linspace(0, 1, nt)};
  out.values = Tensor({nx, nt});
  for (int64_t i = 0; i < nx; ++i) out.values.at(i, 0) = static_cast<real>(s[static_cast<std::size_t>(i)]);

  for (int64_t n = 0; n + 1 < nt; ++n) {
    for (int64_t i = 1; i + 1 < nx; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      // Linearize k s^2 at the new level as k s* s_new, with s* the two-step
      // extrapolant of s at t_{n+1}; a plain one-step lag would cost an order.
      const double star = 1.5 * s[ui] - 0.5 * prev[ui];
      a[ui] = -mu;
      c[ui] = -mu;
      b[ui] = 1 + 2 * mu - 0.5 * dt * k * star;
      r[ui] = s[ui] + mu * (s[ui + 1] - 2 * s[ui] + s[ui - 1]) + 0.5 * dt * k * s[ui] * s[ui] +
              dt * static_cast<double>(u_grid[i]);
    }
    prev = s;
    thomas_solve(a, b, c, r, 1, nx - 2);
    s.front() = 0;
    s.back() = 0;
    for (int64_t i = 1; i + 1 < nx; ++i) s[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)];
    if (diverged(s)) {
      throw NumericError("diffusion-reaction solve diverged past 1e6 at t = " +
                         std::to_string(static_cast<double>(n + 1) * dt));
    }
    for (int64_t i = 0; i < nx; ++i) {
      out.values.at(i, n + 1) = static_cast<real>(s[static_cast<std::size_t>(i)]);
    }
  }
  out.descriptor = json{{"scheme", "crank-nicolson"},
                        {"nx", nx},
                        {"nt", nt},
                        {"diffusivity", D},
                        {"reaction", k},
                        {"linearization", "extrapolated lag"}}
                       .dump();
  return out;
}

GridSolution solve_advection(const Tensor& u_grid, const AdvectionConfig& cfg) {
  check_axis_counts(cfg.nx, cfg.nt, "solve_advection");
  check_samples(u_grid, cfg.nx, "wave speed");
  if (!(cfg.cfl > 0) || cfg.cfl > 1) {
    throw ConfigError("advection cfl must lie in (0, 1], got " +
                      std::to_string(static_cast<double>(cfg.cfl)));
  }
  const int64_t nx = cfg.nx, nt = cfg.nt;
  double umax = u_grid[0], umin = u_grid[0];
  for (int64_t i = 1; i < nx; ++i) {
    umax = std::max(umax, static_cast<double>(u_grid[i]));
    umin = std::min(umin, static_cast<double>(u_grid[i]));
  }
  if (!(umin > 0)) {
    throw ConfigError("advection needs a strictly positive wave speed for the inflow "
                      "boundary; min sampled value is " +
                      std::to_string(umin));
  }
  const double h = 1.0 / static_cast<double>(nx - 1);
  const double dt_out = 1.0 / static_cast<double>(nt - 1);
  const double dt_max = static_cast<double>(cfg.cfl) * h / umax;
  const auto ic = cfg.initial ? cfg.initial : std::function<real(real)>(&advection_initial);
  const auto inflow = cfg.inflow ? cfg.inflow : std::function<real(real)>(&advection_inflow);

  // One-sided second-order slopes of the coefficient at the ends.
  std::vector<double> u(static_cast<std::size_t>(nx)), ux(static_cast<std::size_t>(nx));
  for (int64_t i = 0; i < nx; ++i) u[static_cast<std::size_t>(i)] = u_grid[i];
  for (int64_t i = 1; i + 1 < nx; ++i) {
    ux[static_cast<std::size_t>(i)] =
        (u[static_cast<std::size_t>(i + 1)] - u[static_cast<std::size_t>(i - 1)]) / (2 * h);
  }
  ux.front() = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h);
  ux.back() = (3 * u[static_cast<std::size_t>(nx - 1)] - 4 * u[static_cast<std::size_t>(nx - 2)] +
               u[static_cast<std::size_t>(nx - 3)]) /
              (2 * h);

  std::vector<double> s(static_cast<std::size_t>(nx)), next(static_cast<std::size_t>(nx));
  for (int64_t i = 0; i < nx; ++i) {
    s[static_cast<std::size_t>(i)] = ic(static_cast<real>(static_cast<double>(i) * h));
  }

  GridSolution out;
  out.axes = {linspace(0, 1, nx), linspace(0, 1, nt)};
  out.values = Tensor({nx, nt});
  for (int64_t i = 0; i < nx; ++i) out.values.at(i, 0) = static_cast<real>(s[static_cast<std::size_t>(i)]);

  // Taylor form of Lax-Wendroff for a space-dependent speed:
  // s += -dt u s_x + dt^2/2 u (u_x s_x + u s_xx).
  auto advance = [&](double step, double t_new) {
    for (int64_t i = 1; i + 1 < nx; ++i) {
      const auto m = static_cast<std::size_t>(i);
      const double d0 = (s[m + 1] - s[m - 1]) / (2 * h);
      const double d2 = (s[m + 1] - 2 * s[m] + s[m - 1]) / (h * h);
      next[m] = s[m] - step * u[m] * d0 + 0.5 * step * step * u[m] * (ux[m] * d0 + u[m] * d2);
    }
    // Outflow end: upwind-biased one-sided differences.
    const auto e = static_cast<std::size_t>(nx - 1);
    const double d0 = (3 * s[e] - 4 * s[e - 1] + s[e - 2]) / (2 * h);
    const double d2 = (s[e] - 2 * s[e - 1] + s[e - 2]) / (h * h);
    next[e] = s[e] - step * u[e] * d0 + 0.5 * step * step * u[e] * (ux[e] * d0 + u[e] * d2);
    next[0] = inflow(static_cast<real>(t_new));
    s.swap(next);
  };

  for (int64_t n = 0; n + 1 < nt; ++n) {
    const double t_end = static_cast<double>(n + 1) * dt_out;
    double t = static_cast<double>(n) * dt_out;
    while (t_end - t > 1e-12 * dt_out) {
      const double step = std::min(dt_max, t_end - t);
      advance(step, t + step);
      t += step;
    }
    if (diverged(s)) {
      throw NumericError("advection solve diverged past 1e6 at t = " + std::to_string(t_end));
    }
    for (int64_t i = 0; i < nx; ++i) {
      out.values.at(i, n + 1) = static_cast<real>(s[static_cast<std::size_t>(i)]);
    }
  }
  out.descriptor = json{{"scheme", "lax-wendroff"},
                        {"nx", nx},
                        {"nt", nt},
                        {"cfl", static_cast<double>(cfg.cfl)},
                        {"substep", "greedy with remainder"}}
                       .dump();
  return out;
}

namespace {

using cplx = std::complex<double>;

// Iterative radix-2 transform; n must be a power of two.
void fft_inplace(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2 * kPi / static_cast<double>(len) * (inverse ? 1 : -1);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const cplx p = a[i + j];
        const cplx q = a[i + j + len / 2] * w;
        a[i + j] = p + q;
        a[i + j + len / 2] = p - q;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (cplx& x : a) x /= static_cast<double>(n);
  }
}

}  // namespace

Tensor burgers_nodes(int64_t n_modes) {
  Tensor xs({n_modes});
  for (int64_t j = 0; j < n_modes; ++j) {
    xs[j] = static_cast<real>(static_cast<double>(j) / static_cast<double>(n_modes));
  }
  return xs;
}

GridSolution solve_burgers(const Tensor& u_nodes, const BurgersConfig& cfg) {
  const int64_t n = cfg.n_modes;
  if (n < 8 || (n & (n - 1)) != 0) {
    throw ConfigError("burgers spectral size must be a power of two >= 8, got " +
                      std::to_string(n));
  }
  if (cfg.nx_out < 2 || cfg.nt_out < 2 || cfg.substeps < 1) {
    throw ConfigError("burgers output grid wants nx, nt >= 2 and substeps >= 1");
  }
  check_samples(u_nodes, n, "initial state");

  // Signed wavenumbers in FFT order; the 2/3 rule keeps |k| <= n/3.
  std::vector<double> theta(static_cast<std::size_t>(n));
  std::vector<bool> keep(static_cast<std::size_t>(n));
  for (int64_t j = 0; j < n; ++j) {
    const int64_t k = j <= n / 2 ? j : j - n;
    theta[static_cast<std::size_t>(j)] = 2 * kPi * static_cast<double>(k);
    keep[static_cast<std::size_t>(j)] = 3 * std::abs(k) <= n;
  }

  const double nu = static_cast<double>(cfg.viscosity);
  const double dt = 1.0 / static_cast<double>((cfg.nt_out - 1) * cfg.substeps);
  std::vector<cplx> eh(static_cast<std::size_t>(n)), ef(static_cast<std::size_t>(n));
  for (int64_t j = 0; j < n; ++j) {
    const double decay = std::exp(-nu * theta[static_cast<std::size_t>(j)] *
                                  theta[static_cast<std::size_t>(j)] * dt / 2);
    eh[static_cast<std::size_t>(j)] = decay;
    ef[static_cast<std::size_t>(j)] = decay * decay;
  }

  std::vector<cplx> v(static_cast<std::size_t>(n));
  for (int64_t j = 0; j < n; ++j) v[static_cast<std::size_t>(j)] = static_cast<double>(u_nodes[j]);
  fft_inplace(v, false);
  for (int64_t j = 0; j < n; ++j) {
    if (!keep[static_cast<std::size_t>(j)]) v[static_cast<std::size_t>(j)] = 0;
  }

  std::vector<cplx> phys(static_cast<std::size_t>(n));
  // Nonlinear term -1/2 i theta fft(s^2), dealiased.
  auto nonlin = [&](const std::vector<cplx>& vhat) {
    phys = vhat;
    fft_inplace(phys, true);
    for (cplx& x : phys) x *= x;
    fft_inplace(phys, false);
    std::vector<cplx> g(static_cast<std::size_t>(n));
    for (int64_t j = 0; j < n; ++j) {
      const auto m = static_cast<std::size_t>(j);
      g[m] = keep[m] ? cplx(0, -0.5 * theta[m]) * phys[m] : cplx(0);
    }
    return g;
  };

  const int64_t nx = cfg.nx_out, ntt = cfg.nt_out;
  GridSolution out;
  out.axes = {linspace(0, 1, nx), linspace(0, 1, ntt)};
  out.values = Tensor({nx, ntt});
  // Trig interpolation of the band-limited state onto the output nodes.
  auto emit = [&](int64_t col) {
    for (int64_t i = 0; i < nx; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(nx - 1);
      double acc = 0;
      for (int64_t j = 0; j < n; ++j) {
        const auto m = static_cast<std::size_t>(j);
        if (!keep[m]) continue;
        acc += (v[m] * std::polar(1.0, theta[m] * x)).real();
      }
      out.values.at(i, col) = static_cast<real>(acc / static_cast<double>(n));
    }
  };
  emit(0);

  std::vector<cplx> stage(static_cast<std::size_t>(n));
  for (int64_t col = 1; col < ntt; ++col) {
    for (int64_t sub = 0; sub < cfg.substeps; ++sub) {
      const std::vector<cplx> k1 = nonlin(v);
      for (int64_t j = 0; j < n; ++j) {
        const auto m = static_cast<std::size_t>(j);
        stage[m] = eh[m] * (v[m] + 0.5 * dt * k1[m]);
      }
      const std::vector<cplx> k2 = nonlin(stage);
      for (int64_t j = 0; j < n; ++j) {
        const auto m = static_cast<std::size_t>(j);
        stage[m] = eh[m] * v[m] + 0.5 * dt * k2[m];
      }
      const std::vector<cplx> k3 = nonlin(stage);
      for (int64_t j = 0; j < n; ++j) {
        const auto m = static_cast<std::size_t>(j);
        stage[m] = ef[m] * v[m] + dt * eh[m] * k3[m];
      }
      const std::vector<cplx> k4 = nonlin(stage);
      for (int64_t j = 0; j < n; ++j) {
        const auto m = static_cast<std::size_t>(j);
        v[m] = ef[m] * v[m] + dt / 6.0 * (ef[m] * k1[m] + 2.0 * eh[m] * (k2[m] + k3[m]) + k4[m]);
      }
    }
    phys = v;
    fft_inplace(phys, true);
    bool bad = false;
    for (const cplx& x : phys) bad = bad || !(std::abs(x.real()) <= kBlowup);
    if (bad) {
      throw NumericError("burgers solve diverged past 1e6 at t = " +
                         std::to_string(static_cast<double>(col) /
                                        static_cast<double>(ntt - 1)));
    }
    emit(col);
  }
  out.descriptor = json{{"scheme", "integrating-factor-rk4"},
                        {"modes", n},
                        {"dealias", "2/3"},
                        {"viscosity", nu},
                        {"substeps", cfg.substeps},
                        {"nx", nx},
                        {"nt", ntt}}
                       .dump();
  return out;
}

GridSolution solve_diffusion_2d(const Tensor& u_init, const Diffusion2dConfig& cfg) {
  const int64_t n = cfg.n_side, nt = cfg.nt_out;
  if (n < 3 || nt < 2) {
    throw ConfigError("solve_diffusion_2d wants n_side >= 3 and nt >= 2");
  }
  const bool flat = u_init.rank() == 1 && u_init.numel() == n * n;
  if (!flat && !(u_init.rank() == 2 && u_init.dim(0) == n && u_init.dim(1) == n)) {
    throw DimensionError("initial state must cover the " + std::to_string(n) + " x " +
                         std::to_string(n) + " grid, got " + shape_str(u_init.shape()));
  }
  const double h = 1.0 / static_cast<double>(n - 1);
  const double alpha = static_cast<double>(cfg.alpha);
  const double dt_out = 1.0 / static_cast<double>(nt - 1);

  const auto cells = static_cast<std::size_t>(n * n);
  std::vector<double> s(cells);
  for (int64_t i = 0; i < n * n; ++i) s[static_cast<std::size_t>(i)] = u_init[i];

  GridSolution out;
  out.axes = {linspace(0, 1, n), linspace(0, 1, n), linspace(0, 1, nt)};
  out.values = Tensor({n, n, nt});
  auto emit = [&](int64_t col) {
    for (int64_t c = 0; c < n * n; ++c) {
      out.values[c * nt + col] = static_cast<real>(s[static_cast<std::size_t>(c)]);
    }
  };
  emit(0);
  // Boundary values belong to the initial slab only; the solution is pinned
  // to zero there for every t > 0.
  for (int64_t i = 0; i < n; ++i) {
    s[static_cast<std::size_t>(i * n)] = 0;
    s[static_cast<std::size_t>(i * n + n - 1)] = 0;
    s[static_cast<std::size_t>(i)] = 0;
    s[static_cast<std::size_t>((n - 1) * n + i)] = 0;
  }

  // Conservative central fluxes: d/dt s = alpha div(s grad s).
  auto rhs = [&](const std::vector<double>& w, std::vector<double>& f) {
    std::fill(f.begin(), f.end(), 0.0);
    for (int64_t i = 1; i + 1 < n; ++i) {
      for (int64_t j = 1; j + 1 < n; ++j) {
        const auto c = static_cast<std::size_t>(i * n + j);
        const auto xp = c + static_cast<std::size_t>(n), xm = c - static_cast<std::size_t>(n);
        const double qxp = 0.5 * (w[xp] + w[c]) * (w[xp] - w[c]);
        const double qxm = 0.5 * (w[c] + w[xm]) * (w[c] - w[xm]);
        const double qyp = 0.5 * (w[c + 1] + w[c]) * (w[c + 1] - w[c]);
        const double qym = 0.5 * (w[c] + w[c - 1]) * (w[c] - w[c - 1]);
        f[c] = alpha * (qxp - qxm + qyp - qym) / (h * h);
      }
    }
  };

  std::vector<double> f0(cells), f1(cells), k2(cells), k3(cells), k4(cells), tmp(cells);
  for (int64_t col = 1; col < nt; ++col) {
    double smax = 0;
    for (double x : s) smax = std::max(smax, std::abs(x));
    const double bound =
        static_cast<double>(cfg.dt_safety) * h * h / (8 * alpha * std::max(smax, 1e-12));
    const int64_t steps = cfg.forced_substeps > 0
                              ? cfg.forced_substeps
                              : static_cast<int64_t>(std::ceil(dt_out / bound));
    const double dt = dt_out / static_cast<double>(steps);

    // RK4 bootstrap, then two-step Adams-Bashforth for the rest.
    rhs(s, f0);
    for (std::size_t c = 0; c < cells; ++c) tmp[c] = s[c] + 0.5 * dt * f0[c];
    rhs(tmp, k2);
    for (std::size_t c = 0; c < cells; ++c) tmp[c] = s[c] + 0.5 * dt * k2[c];
    rhs(tmp, k3);
    for (std::size_t c = 0; c < cells; ++c) tmp[c] = s[c] + dt * k3[c];
    rhs(tmp, k4);
    for (std::size_t c = 0; c < cells; ++c) {
      s[c] += dt / 6 * (f0[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
    }
    for (int64_t m = 1; m < steps; ++m) {
      rhs(s, f1);
      for (std::size_t c = 0; c < cells; ++c) s[c] += dt * (1.5 * f1[c] - 0.5 * f0[c]);
      f0.swap(f1);
    }
    if (diverged(s)) {
      throw NumericError("nonlinear diffusion solve went unstable at t = " +
                         std::to_string(static_cast<double>(col) * dt_out));
    }
    emit(col);
  }
  out.descriptor = json{{"scheme", "adams-bashforth-2"},
                        {"bootstrap", "rk4 per output interval"},
                        {"n_side", n},
                        {"nt", nt},
                        {"alpha", alpha},
                        {"dt_rule", "h^2 / (8 alpha max s)"},
                        {"dt_safety", static_cast<double>(cfg.dt_safety)},
                        {"forced_substeps", cfg.forced_substeps}}
                       .dump();
  return out;
}

}  // namespace sepnet
