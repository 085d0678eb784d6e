#pragma once

#include <string>
#include <vector>

#include "sepnet/pde.hpp"
#include "sepnet/rng.hpp"
#include "sepnet/tensor.hpp"

namespace sepnet {

// Input-function generators for the five problems plus collocation sampling.
// Everything is driven by the counter-based Rng, so a (seed, stream) pair
// reproduces a batch bit-exactly no matter what was drawn before it.

enum class InputKind { GrfRbf, AdvectionCoeff, PeriodicSpectral, DirichletSpectral, GaussianSum2d };

// One batch of sampled input functions. Sensor values feed the branch net;
// spectral/bump kinds also carry their representation so the same functions
// can be evaluated at arbitrary collocation locations. Kernel-sampled kinds
// (GrfRbf, AdvectionCoeff) have no closed form; use the joint samplers when
// off-sensor values are needed.
struct FunctionBatch {
  InputKind kind = InputKind::GrfRbf;
  Tensor at_sensors;  // [F x m]
  Tensor cos_coeffs;  // [F x J] spectral kinds
  Tensor sin_coeffs;  // [F x J]
  Tensor bump_params; // [F x 12]: three bumps of (A, w, cx, cy)
  std::string descriptor;  // JSON: kind, parameters, seed/stream/counter

  int64_t n_funcs() const { return at_sensors.rank() == 2 ? at_sensors.dim(0) : 0; }
  int64_t n_sensors() const { return at_sensors.rank() == 2 ? at_sensors.dim(1) : 0; }

  // Spectral kinds only: evaluate every function at the given locations.
  Tensor eval_1d(const Tensor& xs) const;                      // [F x numel(xs)]
  // Gaussian-sum kind only.
  Tensor eval_2d_grid(const Tensor& xs, const Tensor& ys) const;  // [F x Nx x Ny]
  Tensor eval_2d_points(const Tensor& pts) const;                 // [F x P], pts [P x 2]
};

// A kernel-GRF batch read at the sensors and at extra locations in one
// consistent draw (duplicate locations are merged before factorization).
struct JointDraw {
  FunctionBatch batch;
  Tensor at_extra;  // [F x q]
};

// Squared-exponential kernel matrix over 1d locations.
Tensor rbf_kernel(const Tensor& xs, real length_scale, real variance);

// Lower-triangular Cholesky factor. Throws NumericError with an estimate of
// the smallest eigenvalue when the matrix is not positive definite.
Tensor cholesky_lower(const Tensor& K);

// Mean-zero GRF with RBF covariance (diagonal jitter 1e-10).
FunctionBatch sample_grf_rbf(Rng& rng, int64_t n_funcs, const Tensor& sensors,
                             real length_scale = real(0.2), real variance = 1);
JointDraw sample_grf_rbf_joint(Rng& rng, int64_t n_funcs, const Tensor& sensors,
                               const Tensor& extra, real length_scale = real(0.2),
                               real variance = 1);

// Strictly positive advection coefficients u = v - min_sensors(v) + 1.
FunctionBatch sample_advection_coeff(Rng& rng, int64_t n_funcs, const Tensor& sensors);
JointDraw sample_advection_coeff_joint(Rng& rng, int64_t n_funcs, const Tensor& sensors,
                                       const Tensor& extra);

// Periodic spectral GRF for the viscous Burgers initial conditions:
// u(x) = sum_j c_j cos(2 pi j x) + s_j sin(2 pi j x), c_j, s_j i.i.d. normal
// with std 25 ((2 pi j)^2 + 25)^-2, j = 1 .. floor(m/2).
FunctionBatch sample_periodic_grf(Rng& rng, int64_t n_funcs, const Tensor& sensors);

// Zero-Dirichlet analogue on the sine eigenbasis, used for the heat problem:
// u(x) = sum_k c_k sin(k pi x), std 25 ((k pi)^2 + 25)^-2, k = 1 .. floor(m/2).
FunctionBatch sample_dirichlet_grf(Rng& rng, int64_t n_funcs, const Tensor& sensors);

// Sum of three Gaussian bumps on [0,1]^2; sensor grid is xs x ys flattened
// row-major. A ~ U(0.2, 0.5), w ~ U(10, 20), centers ~ U(-0.5, 0.5)^2.
FunctionBatch sample_gaussian_sum_2d(Rng& rng, int64_t n_funcs, const Tensor& xs,
                                     const Tensor& ys);

// Collocation layout for one resample period, shared by both models: the
// separable model consumes the axes directly, the fused model takes their
// meshgrid. Interior axes are N sorted uniform draws; initial/boundary axes
// are deterministic endpoint-included grids, N points per varying axis.
struct CollocationSet {
  std::vector<Tensor> interior_axes;            // d axes
  std::vector<Tensor> initial_axes;             // d axes, time axis pinned to {0}
  std::vector<std::vector<Tensor>> face_axes;   // one axis list per boundary face
};
CollocationSet collocation_axes(Rng& rng, const PdeProblem& p, int64_t N);

// Sensor locations per problem: equispaced on [0,1] (1d input functions) or
// an equispaced side x side grid flattened row-major (2d). m must be a
// perfect square for 2d problems.
Tensor sensor_locations_1d(int64_t m);
void sensor_grid_2d(int64_t m, Tensor& xs, Tensor& ys);

}  // namespace sepnet
