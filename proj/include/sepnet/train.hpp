#pragma once

#include <string>
#include <variant>
#include <vector>

#include "sepnet/nets.hpp"
#include "sepnet/pde.hpp"
#include "sepnet/refsolve.hpp"
#include "sepnet/sampling.hpp"

namespace sepnet {

// Adam training of the operator models on the physics loss, with the
// published schedule: base rate 1e-3 decaying by 0.9 every 1000 iterations
// (staircase), full batch over functions, dataset resampled every 100
// iterations, moments retained across resamples.

struct TrainConfig {
  std::string problem = "heat";
  std::string model = "seponet";  // seponet | pideeponet
  int64_t n_funcs = 20;           // functions per batch, all used every iteration
  int64_t n_per_axis = 32;        // N; the fused model materializes N^d points
  int64_t r = 16;
  int64_t width = 25;
  int64_t depth = 4;
  int64_t iterations = 20000;
  real base_lr = static_cast<real>(1e-3);
  real decay = static_cast<real>(0.9);
  int64_t decay_every = 1000;
  int64_t resample_every = 100;
  real lambda_I = -1;  // negative: use the problem's published weight
  real lambda_b = -1;
  uint64_t seed = 0;
  std::string precision;  // "f32"/"f64"; must match the build when set
};
TrainConfig parse_train_config(const std::string& json_text);

struct AdamState {
  std::vector<Tensor> m1;  // first moments, param_blocks order
  std::vector<Tensor> m2;  // second moments
  int64_t step = 0;
  real beta1 = static_cast<real>(0.9);
  real beta2 = static_cast<real>(0.999);
  real eps = static_cast<real>(1e-8);
};
AdamState init_adam_state(const ModelVariant& model);

// Staircase schedule: base * decay^floor(iteration / period).
real lr_at(int64_t iteration, real base = static_cast<real>(1e-3),
           real decay = static_cast<real>(0.9), int64_t period = 1000);

// Standard Adam with bias correction, in place. Every gradient is validated
// before any parameter moves; a non-finite gradient raises NumericError
// naming the offending block (names fall back to indices when empty).
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, real lr, const std::vector<std::string>& names = {});

// One resampled dataset: input functions, the collocation layout, and the
// problem's data tensors shaped for the requested layout (axis grids for the
// separable model, flattened point rows for the fused one; both flatten to
// identical memory, only the shapes differ). Tensors a problem does not use
// stay empty.
struct TrainingBatch {
  FunctionBatch functions;
  CollocationSet colloc;
  Tensor u_interior;  // source / coefficient on the interior layout
  Tensor ic_target;   // initial-condition targets
  Tensor bc_target;   // inflow targets (single-face problems)
};
TrainingBatch sample_training_batch(const PdeProblem& p, Rng& func_rng, Rng& point_rng,
                                    int64_t n_funcs, int64_t n_per_axis, int64_t m,
                                    bool grid_layout);

// Parameters lifted onto a tape, with the leaves in param_blocks order so
// gradients can be read back against the model's tensors.
struct LiftedModel {
  std::variant<SepOnetVars, DeepOnetVars> vars;
  std::vector<ad::Var> params;
};
LiftedModel lift_model(ad::Tape& tape, const ModelVariant& model);

// Physics loss of one model on one batch; the batch layout must match the
// model kind (grid for separable, points for fused).
LossTerms batch_loss(ad::Tape& tape, const LiftedModel& lifted, const PdeProblem& p,
                     const TrainingBatch& batch);

struct LossRow {
  int64_t iteration = 0;
  double total = 0;
  double residual = 0;
  double initial = 0;
  double boundary = 0;
  double lr = 0;
};
void write_loss_csv(const std::string& path, const std::vector<LossRow>& history);

struct Telemetry {
  double median_ms_per_iter = 0;  // steady state, first 50 iterations excluded
  double total_seconds = 0;
  double peak_rss_mb = 0;      // sampled resident set minus pre-run baseline
  double logical_peak_mb = 0;  // tensor allocator high-water during the run
  std::string methodology;
};

struct TrainResult {
  ModelVariant model;
  AdamState adam;
  std::vector<LossRow> history;
  Telemetry telemetry;
  bool aborted = false;       // loss or gradient went non-finite
  std::string abort_reason;   // empty unless aborted
};
// Runs the configured optimization. On a non-finite loss the parameters from
// the last finite-loss iteration are restored and the run stops early.
TrainResult train(const TrainConfig& cfg);

// Checkpoint: model serialization plus the Adam moment blocks.
void save_checkpoint(const std::string& path, const ModelVariant& model,
                     const AdamState& state);
ModelVariant load_checkpoint(const std::string& path, AdamState* state);

// Held-out evaluation data: functions drawn from the test stream plus one
// reference solution per function.
struct TestSet {
  FunctionBatch functions;
  std::vector<GridSolution> references;
};
// resolution 0 picks the problem default (128 for the 1d problems, 101 for
// the spectral one, 41 per side for the 2d one).
TestSet build_test_set(const PdeProblem& p, uint64_t seed, int64_t n_funcs,
                       int64_t resolution = 0);

struct EvalMetrics {
  std::vector<double> rel_l2;  // per function, over the full reference grid
  std::vector<double> rmse;
  double rel_l2_mean = 0;
  double rel_l2_std = 0;
  double rmse_mean = 0;
  double rmse_std = 0;
};
EvalMetrics evaluate(const ModelVariant& model, const TestSet& tests);

}  // namespace sepnet
