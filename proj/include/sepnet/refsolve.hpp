#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sepnet/tensor.hpp"

namespace sepnet {

// Ground-truth generators: the analytic sine-series heat solution plus one
// numerical reference solver per benchmark. Every solver handles a single
// input function, sampled wherever the scheme needs it, and returns the
// solution on its output grid with axes ordered space first, time last.

struct GridSolution {
  std::vector<Tensor> axes;  // coordinate vectors, time last
  Tensor values;             // [N_1 x ... x N_d], matching the axis lengths
  std::string descriptor;    // JSON: scheme, resolution, internal step sizes
};

// Sine-series coefficients of u on [0,1]: A_k = 2 int_0^1 sin(k pi x) u dx by
// the trapezoid rule on the equispaced sensor grid, which integrates the sine
// modes exactly (discrete orthogonality). Ranks beyond the grid's
// distinguishable band (m - 2 for m sensors) are cut off and flagged.
struct HeatSeries {
  Tensor coefficients;  // [K]
  int64_t rank = 0;
  bool truncated = false;
};
HeatSeries heat_series(const Tensor& u_sensors, int64_t K);

// s(x,t) = sum_k A_k exp(-k^2 t) sin(k pi x), the exact solution of
// s_t = (1/pi^2) s_xx with zero boundary values and s(x,0) = u.
GridSolution heat_analytic(const Tensor& u_sensors, int64_t K, const Tensor& xs,
                           const Tensor& ts);

// s_t = D s_xx + k s^2 + u(x) on the unit square of space-time, zero initial
// and boundary values. Crank-Nicolson with central differences; the reaction
// term is linearized as k s* s_new with s* extrapolated to the new time from
// the previous two steps, which keeps the scheme second order at the cost of
// one tridiagonal solve per step. `initial` (given at the x nodes) replaces
// the zero start state; cross-checks against the heat series use it.
struct DiffusionReactionConfig {
  int64_t nx = 128;
  int64_t nt = 128;
  real diffusivity = real(0.01);
  real reaction = real(0.01);
  Tensor initial;
};
GridSolution solve_diffusion_reaction(const Tensor& u_grid,
                                      const DiffusionReactionConfig& cfg = {});

// s_t + u(x) s_x = 0 with inflow boundary at x = 0. Lax-Wendroff with the
// variable-coefficient Taylor correction, sub-stepped so every internal step
// satisfies max(u) dt/dx <= cfl; the last sub-step of each output interval is
// shortened to land on the output time. `initial`/`inflow` default to the
// problem's sin(pi x) and sin(pi t/2) data; overriding them with compatible
// smooth data removes the characteristic kink for convergence studies.
struct AdvectionConfig {
  int64_t nx = 128;
  int64_t nt = 128;
  real cfl = real(0.9);
  std::function<real(real)> initial;
  std::function<real(real)> inflow;
};
GridSolution solve_advection(const Tensor& u_grid, const AdvectionConfig& cfg = {});

// Periodic nodes j/n, j = 0..n-1, where solve_burgers reads its start state.
Tensor burgers_nodes(int64_t n_modes = 128);

// s_t + s s_x = nu s_xx, periodic. Fourier pseudo-spectral with 2/3-rule
// dealiasing; the diffusion term is integrated exactly by an integrating
// factor and the rest by RK4. Output is trig-interpolated onto an
// endpoint-included uniform grid.
struct BurgersConfig {
  int64_t n_modes = 128;  // power of two
  int64_t nx_out = 101;
  int64_t nt_out = 101;
  real viscosity = real(0.01);
  int64_t substeps = 10;  // internal steps per output interval
};
GridSolution solve_burgers(const Tensor& u_nodes, const BurgersConfig& cfg = {});

// s_t = alpha div(s grad s) on the unit square, zero boundary values.
// Conservative central fluxes in space; two-step Adams-Bashforth in time with
// an RK4 bootstrap restarted at each output interval. The step size obeys
// dt <= dt_safety * h^2 / (8 alpha max s), recomputed per interval;
// forced_substeps > 0 overrides the bound (convergence studies only).
struct Diffusion2dConfig {
  int64_t n_side = 101;
  int64_t nt_out = 101;
  real alpha = real(0.05);
  real dt_safety = real(1);
  int64_t forced_substeps = 0;
};
GridSolution solve_diffusion_2d(const Tensor& u_init, const Diffusion2dConfig& cfg = {});

}  // namespace sepnet
