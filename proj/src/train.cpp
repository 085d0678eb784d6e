#include "sepnet/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sepnet/errors.hpp"
#include "sepnet/griddump.hpp"

namespace sepnet {

using nlohmann::json;

namespace {

const char* build_precision() { return sizeof(real) == 8 ? "f64" : "f32"; }

Tensor with_shape(const Tensor& flat, std::vector<int64_t> shape) {
  Tensor out(std::move(shape));
  if (out.numel() != flat.numel()) {
    throw DimensionError("cannot reshape " + shape_str(flat.shape()) + " to " +
                         shape_str(out.shape()));
  }
  for (int64_t i = 0; i < flat.numel(); ++i) out[i] = flat[i];
  return out;
}

Tensor row_of(const Tensor& t, int64_t f) {
  Tensor r({1, t.dim(1)});
  for (int64_t j = 0; j < t.dim(1); ++j) r.at(0, j) = t.at(f, j);
  return r;
}

// Values indexed by the leading collocation axis, repeated across the trailing
// axes. Row-major layout makes the grid and point forms byte-identical.
Tensor broadcast_leading(const Tensor& per_x, const std::vector<int64_t>& lengths) {
  int64_t tail = 1;
  for (std::size_t a = 1; a < lengths.size(); ++a) tail *= lengths[a];
  const int64_t F = per_x.dim(0), n0 = per_x.dim(1);
  Tensor out({F, n0 * tail});
  for (int64_t f = 0; f < F; ++f) {
    for (int64_t i = 0; i < n0; ++i) {
      const real v = per_x.at(f, i);
      for (int64_t j = 0; j < tail; ++j) out.at(f, i * tail + j) = v;
    }
  }
  return out;
}

std::vector<int64_t> axis_lengths(const std::vector<Tensor>& axes) {
  std::vector<int64_t> out;
  out.reserve(axes.size());
  for (const Tensor& a : axes) out.push_back(a.numel());
  return out;
}

std::vector<int64_t> layout_shape(int64_t F, const std::vector<int64_t>& lengths,
                                  bool grid_layout) {
  std::vector<int64_t> shape{F};
  if (grid_layout) {
    shape.insert(shape.end(), lengths.begin(), lengths.end());
  } else {
    int64_t total = 1;
    for (int64_t l : lengths) total *= l;
    shape.push_back(total);
  }
  return shape;
}

}  // namespace

TrainConfig parse_train_config(const std::string& json_text) {
  const json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ConfigError("training config is not a JSON object");
  }
  static const std::vector<std::string> known = {
      "problem", "model",      "n_funcs",        "n_per_axis", "r",
      "width",   "depth",      "iterations",     "base_lr",    "decay",
      "decay_every", "resample_every", "lambda_i", "lambda_b", "seed",
      "precision"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ConfigError("unknown training config key '" + item.key() + "'");
    }
  }
  TrainConfig c;
  c.problem = j.value("problem", c.problem);
  c.model = j.value("model", c.model);
  c.n_funcs = j.value("n_funcs", c.n_funcs);
  c.n_per_axis = j.value("n_per_axis", c.n_per_axis);
  c.r = j.value("r", c.r);
  c.width = j.value("width", c.width);
  c.depth = j.value("depth", c.depth);
  c.iterations = j.value("iterations", c.iterations);
  c.base_lr = j.value("base_lr", c.base_lr);
  c.decay = j.value("decay", c.decay);
  c.decay_every = j.value("decay_every", c.decay_every);
  c.resample_every = j.value("resample_every", c.resample_every);
  c.lambda_I = j.value("lambda_i", c.lambda_I);
  c.lambda_b = j.value("lambda_b", c.lambda_b);
  c.seed = j.value("seed", c.seed);
  c.precision = j.value("precision", c.precision);
  return c;
}

AdamState init_adam_state(const ModelVariant& model) {
  AdamState st;
  for (const Tensor* p : param_blocks(model)) {
    st.m1.emplace_back(std::vector<int64_t>(p->shape()));
    st.m2.emplace_back(std::vector<int64_t>(p->shape()));
  }
  return st;
}

real lr_at(int64_t iteration, real base, real decay, int64_t period) {
  if (iteration < 0 || period < 1) {
    throw ArgumentError("lr_at wants iteration >= 0 and period >= 1");
  }
  return base * static_cast<real>(
                    std::pow(static_cast<double>(decay),
                             static_cast<double>(iteration / period)));
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& st, real lr, const std::vector<std::string>& names) {
  const std::size_t n = params.size();
  if (grads.size() != n || st.m1.size() != n || st.m2.size() != n) {
    throw DimensionError("adam_step: " + std::to_string(n) + " parameter blocks, " +
                         std::to_string(grads.size()) + " gradients, " +
                         std::to_string(st.m1.size()) + " moment blocks");
  }
  auto block_name = [&](std::size_t i) {
    return i < names.size() ? names[i] : "parameter block " + std::to_string(i);
  };
  // Validate everything before any state moves, so a bad gradient cannot
  // leave a half-applied update behind.
  for (std::size_t i = 0; i < n; ++i) {
    if (grads[i].shape() != params[i]->shape() || st.m1[i].shape() != params[i]->shape()) {
      throw DimensionError("adam_step: shape mismatch in " + block_name(i));
    }
    for (int64_t j = 0; j < grads[i].numel(); ++j) {
      if (!std::isfinite(static_cast<double>(grads[i][j]))) {
        throw NumericError("gradient for " + block_name(i) + " is not finite at step " +
                           std::to_string(st.step + 1));
      }
    }
  }
  st.step += 1;
  const real bc1 = 1 - static_cast<real>(std::pow(static_cast<double>(st.beta1),
                                                  static_cast<double>(st.step)));
  const real bc2 = 1 - static_cast<real>(std::pow(static_cast<double>(st.beta2),
                                                  static_cast<double>(st.step)));
  for (std::size_t i = 0; i < n; ++i) {
    Tensor& p = *params[i];
    Tensor& m1 = st.m1[i];
    Tensor& m2 = st.m2[i];
    const Tensor& g = grads[i];
    for (int64_t j = 0; j < p.numel(); ++j) {
      m1[j] = st.beta1 * m1[j] + (1 - st.beta1) * g[j];
      m2[j] = st.beta2 * m2[j] + (1 - st.beta2) * g[j] * g[j];
      const real mhat = m1[j] / bc1;
      const real vhat = m2[j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

TrainingBatch sample_training_batch(const PdeProblem& p, Rng& func_rng, Rng& point_rng,
                                    int64_t n_funcs, int64_t n_per_axis, int64_t m,
                                    bool grid_layout) {
  if (n_funcs < 1) throw ArgumentError("sample_training_batch wants n_funcs >= 1");
  TrainingBatch b;
  b.colloc = collocation_axes(point_rng, p, n_per_axis);
  const auto interior_len = axis_lengths(b.colloc.interior_axes);
  const auto initial_len = axis_lengths(b.colloc.initial_axes);

  switch (p.kind) {
    case PdeKind::DiffusionReaction: {
      // The source enters the residual at the interior x locations, which are
      // not sensors, so the field is drawn jointly at both.
      JointDraw jd = sample_grf_rbf_joint(func_rng, n_funcs, sensor_locations_1d(m),
                                          b.colloc.interior_axes[0]);
      b.functions = std::move(jd.batch);
      b.u_interior = with_shape(broadcast_leading(jd.at_extra, interior_len),
                                layout_shape(n_funcs, interior_len, grid_layout));
      break;
    }
    case PdeKind::Advection: {
      JointDraw jd = sample_advection_coeff_joint(func_rng, n_funcs, sensor_locations_1d(m),
                                                  b.colloc.interior_axes[0]);
      b.functions = std::move(jd.batch);
      b.u_interior = with_shape(broadcast_leading(jd.at_extra, interior_len),
                                layout_shape(n_funcs, interior_len, grid_layout));
      // Published data: initial trace sin(pi x), inflow trace sin(pi t / 2).
      const Tensor& x0 = b.colloc.initial_axes[0];
      Tensor ic({n_funcs, x0.numel()});
      for (int64_t i = 0; i < x0.numel(); ++i) {
        const real v = advection_initial(x0[i]);
        for (int64_t f = 0; f < n_funcs; ++f) ic.at(f, i) = v;
      }
      b.ic_target = with_shape(ic, layout_shape(n_funcs, initial_len, grid_layout));
      const auto& face = b.colloc.face_axes.at(0);
      const Tensor& ts = face[1];
      Tensor bc({n_funcs, ts.numel()});
      for (int64_t i = 0; i < ts.numel(); ++i) {
        const real v = advection_inflow(ts[i]);
        for (int64_t f = 0; f < n_funcs; ++f) bc.at(f, i) = v;
      }
      b.bc_target = with_shape(bc, layout_shape(n_funcs, axis_lengths(face), grid_layout));
      break;
    }
    case PdeKind::Burgers: {
      b.functions = sample_periodic_grf(func_rng, n_funcs, sensor_locations_1d(m));
      b.ic_target = with_shape(b.functions.eval_1d(b.colloc.initial_axes[0]),
                               layout_shape(n_funcs, initial_len, grid_layout));
      break;
    }
    case PdeKind::Diffusion2d: {
      Tensor sx, sy;
      sensor_grid_2d(m, sx, sy);
      b.functions = sample_gaussian_sum_2d(func_rng, n_funcs, sx, sy);
      b.ic_target = with_shape(
          b.functions.eval_2d_grid(b.colloc.initial_axes[0], b.colloc.initial_axes[1]),
          layout_shape(n_funcs, initial_len, grid_layout));
      break;
    }
    case PdeKind::Heat: {
      b.functions = sample_dirichlet_grf(func_rng, n_funcs, sensor_locations_1d(m));
      b.ic_target = with_shape(b.functions.eval_1d(b.colloc.initial_axes[0]),
                               layout_shape(n_funcs, initial_len, grid_layout));
      break;
    }
  }
  return b;
}

LiftedModel lift_model(ad::Tape& tape, const ModelVariant& model) {
  LiftedModel out;
  auto collect = [&](const ad::MlpVars& mv) {
    for (const auto& layer : mv.layers) {
      out.params.push_back(layer.first);
      out.params.push_back(layer.second);
    }
  };
  if (const auto* s = std::get_if<SepOnetModel>(&model)) {
    SepOnetVars v = lift(tape, *s);
    collect(v.branch);
    for (const auto& t : v.trunks) collect(t);
    out.vars = std::move(v);
  } else {
    const auto& d = std::get<DeepOnetModel>(model);
    DeepOnetVars v = lift(tape, d);
    collect(v.branch);
    collect(v.trunk);
    out.vars = std::move(v);
  }
  return out;
}

LossTerms batch_loss(ad::Tape& tape, const LiftedModel& lifted, const PdeProblem& p,
                     const TrainingBatch& batch) {
  const Tensor& us = batch.functions.at_sensors;
  PhysicsData data;
  if (batch.u_interior.numel() > 0) data.u_interior = tape.constant(batch.u_interior);
  if (batch.ic_target.numel() > 0) data.ic_target = tape.constant(batch.ic_target);
  if (batch.bc_target.numel() > 0) data.bc_target = tape.constant(batch.bc_target);

  FieldWithDerivs interior, initial;
  std::vector<FieldWithDerivs> faces;
  faces.reserve(batch.colloc.face_axes.size());
  if (const auto* sv = std::get_if<SepOnetVars>(&lifted.vars)) {
    interior = seponet_field_with_derivs(tape, *sv, us, batch.colloc.interior_axes,
                                         p.interior_derivs);
    initial = seponet_field_with_derivs(tape, *sv, us, batch.colloc.initial_axes, {});
    for (const auto& fa : batch.colloc.face_axes) {
      faces.push_back(seponet_field_with_derivs(tape, *sv, us, fa, p.boundary_derivs));
    }
  } else {
    const auto& dv = std::get<DeepOnetVars>(lifted.vars);
    interior = deeponet_field_with_derivs(tape, dv, us,
                                          meshgrid_points(batch.colloc.interior_axes),
                                          p.interior_derivs);
    initial = deeponet_field_with_derivs(tape, dv, us,
                                         meshgrid_points(batch.colloc.initial_axes), {});
    for (const auto& fa : batch.colloc.face_axes) {
      faces.push_back(
          deeponet_field_with_derivs(tape, dv, us, meshgrid_points(fa), p.boundary_derivs));
    }
  }
  return physics_loss(tape, p, interior, initial, faces, data);
}

void write_loss_csv(const std::string& path, const std::vector<LossRow>& history) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  f << "iteration,total,residual,initial,boundary,lr\n";
  char line[256];
  for (const LossRow& r : history) {
    std::snprintf(line, sizeof(line), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(r.iteration), r.total, r.residual, r.initial,
                  r.boundary, r.lr);
    f << line;
  }
  if (!f) throw ConfigError("write to '" + path + "' failed");
}

namespace {

int64_t read_rss_kb() {
  std::ifstream f("/proc/self/status");
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("VmRSS:", 0) == 0) {
      return std::strtoll(line.c_str() + 6, nullptr, 10);
    }
  }
  return -1;
}

// Background resident-set watcher. The training math never reads it, so the
// extra thread cannot disturb determinism.
class RssSampler {
 public:
  void start() {
    baseline_kb_ = read_rss_kb();
    if (baseline_kb_ < 0) return;
    peak_kb_.store(baseline_kb_);
    running_.store(true);
    thread_ = std::thread([this] {
      while (running_.load()) {
        const int64_t kb = read_rss_kb();
        if (kb > peak_kb_.load()) peak_kb_.store(kb);
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
    });
  }
  double stop_peak_mb() {
    if (baseline_kb_ < 0) return 0;
    running_.store(false);
    if (thread_.joinable()) thread_.join();
    const int64_t last = read_rss_kb();
    const int64_t peak = std::max(peak_kb_.load(), last);
    return static_cast<double>(peak - baseline_kb_) / 1024.0;
  }

 private:
  std::thread thread_;
  std::atomic<bool> running_{false};
  std::atomic<int64_t> peak_kb_{0};
  int64_t baseline_kb_ = -1;
};

double median_of(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void validate_config(const TrainConfig& cfg) {
  if (cfg.model != "seponet" && cfg.model != "pideeponet") {
    throw ConfigError("model must be 'seponet' or 'pideeponet', got '" + cfg.model + "'");
  }
  if (cfg.n_funcs < 1 || cfg.n_per_axis < 2 || cfg.r < 1 || cfg.width < 1 ||
      cfg.depth < 1 || cfg.iterations < 0 || cfg.resample_every < 1 ||
      cfg.decay_every < 1) {
    throw ConfigError("training config has a non-positive count");
  }
  if (!(cfg.base_lr > 0) || !(cfg.decay > 0) || cfg.decay > 1) {
    throw ConfigError("training config wants base_lr > 0 and decay in (0, 1]");
  }
  if (!cfg.precision.empty() && cfg.precision != build_precision()) {
    throw ConfigError("config asks for " + cfg.precision + " but this build computes in " +
                      build_precision());
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
  validate_config(cfg);
  PdeProblem p = make_problem(cfg.problem);
  if (cfg.lambda_I >= 0) p.lambda_I = cfg.lambda_I;
  if (cfg.lambda_b >= 0) p.lambda_b = cfg.lambda_b;
  const bool grid = cfg.model == "seponet";
  const int64_t m = p.default_m;

  TrainResult out;
  out.model = grid ? ModelVariant(init_seponet(cfg.seed, m, p.dim, cfg.r, cfg.width, cfg.depth))
                   : ModelVariant(init_deeponet(cfg.seed, m, p.dim, cfg.r, cfg.width, cfg.depth));
  out.adam = init_adam_state(out.model);
  out.telemetry.methodology =
      "median wall-clock ms per iteration excluding the first 50; resident-set peak "
      "sampled every 100 ms minus the pre-run baseline; logical peak from the tensor "
      "allocator high-water mark";
  if (cfg.iterations == 0) return out;

  Rng func_rng(cfg.seed, streams::kTrainFunctions);
  Rng point_rng(cfg.seed, streams::kTrainPoints);
  const auto names = param_names(out.model);

  memtrack::reset_peak();
  RssSampler rss;
  rss.start();
  const auto run_start = std::chrono::steady_clock::now();

  TrainingBatch batch;
  ad::Tape tape;
  std::vector<double> iter_ms;
  iter_ms.reserve(static_cast<std::size_t>(cfg.iterations));
  out.history.reserve(static_cast<std::size_t>(cfg.iterations));
  std::vector<Tensor> last_good;

  for (int64_t it = 0; it < cfg.iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    if (it % cfg.resample_every == 0) {
      batch = sample_training_batch(p, func_rng, point_rng, cfg.n_funcs, cfg.n_per_axis, m,
                                    grid);
    }
    tape.reset();
    const LiftedModel lifted = lift_model(tape, out.model);
    const LossTerms lt = batch_loss(tape, lifted, p, batch);
    const double total = lt.total.value()[0];
    if (!std::isfinite(total)) {
      // Roll back to the parameters from the last finite-loss iteration.
      if (!last_good.empty()) {
        auto blocks = param_blocks(out.model);
        for (std::size_t i = 0; i < blocks.size(); ++i) *blocks[i] = last_good[i];
      }
      out.aborted = true;
      out.abort_reason = "loss became non-finite at iteration " + std::to_string(it) +
                         "; parameters restored from the previous iteration";
      break;
    }
    const real lr = lr_at(it, cfg.base_lr, cfg.decay, cfg.decay_every);
    tape.backward(lt.total, Tensor::scalar(1));
    std::vector<Tensor> grads;
    grads.reserve(lifted.params.size());
    for (ad::Var v : lifted.params) grads.push_back(tape.grad(v));

    auto blocks = param_blocks(out.model);
    last_good.clear();
    for (const Tensor* b : blocks) last_good.push_back(*b);
    try {
      adam_step(blocks, grads, out.adam, lr, names);
    } catch (const NumericError& e) {
      out.aborted = true;
      out.abort_reason = e.what();
      break;
    }
    out.history.push_back({it, total, lt.residual.value()[0], lt.initial.value()[0],
                           lt.boundary.value()[0], static_cast<double>(lr)});
    iter_ms.push_back(std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count());
  }

  out.telemetry.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
  out.telemetry.peak_rss_mb = rss.stop_peak_mb();
  out.telemetry.logical_peak_mb =
      static_cast<double>(memtrack::peak_bytes()) / (1024.0 * 1024.0);
  if (iter_ms.size() > 50) iter_ms.erase(iter_ms.begin(), iter_ms.begin() + 50);
  out.telemetry.median_ms_per_iter = median_of(std::move(iter_ms));
  return out;
}

void save_checkpoint(const std::string& path, const ModelVariant& model,
                     const AdamState& state) {
  std::vector<Tensor> blocks;
  blocks.reserve(state.m1.size() + state.m2.size());
  for (const Tensor& t : state.m1) blocks.push_back(t);
  for (const Tensor& t : state.m2) blocks.push_back(t);
  char buf[64];
  std::map<std::string, std::string> meta;
  meta["step"] = std::to_string(state.step);
  std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(state.beta1));
  meta["beta1"] = buf;
  std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(state.beta2));
  meta["beta2"] = buf;
  std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(state.eps));
  meta["eps"] = buf;
  save_model_with_state(path, model, meta, blocks);
}

ModelVariant load_checkpoint(const std::string& path, AdamState* state) {
  std::map<std::string, std::string> meta;
  std::vector<Tensor> blocks;
  ModelVariant model = load_model_with_state(path, &meta, &blocks);
  if (state != nullptr) {
    const std::size_t n = param_blocks(model).size();
    if (blocks.size() != 2 * n) {
      throw ConfigError("'" + path + "' holds " + std::to_string(blocks.size()) +
                        " state blocks for " + std::to_string(n) + " parameter blocks");
    }
    state->m1.assign(blocks.begin(), blocks.begin() + static_cast<std::ptrdiff_t>(n));
    state->m2.assign(blocks.begin() + static_cast<std::ptrdiff_t>(n), blocks.end());
    state->step = std::stoll(meta.at("step"));
    state->beta1 = static_cast<real>(std::strtod(meta.at("beta1").c_str(), nullptr));
    state->beta2 = static_cast<real>(std::strtod(meta.at("beta2").c_str(), nullptr));
    state->eps = static_cast<real>(std::strtod(meta.at("eps").c_str(), nullptr));
  }
  return model;
}

TestSet build_test_set(const PdeProblem& p, uint64_t seed, int64_t n_funcs,
                       int64_t resolution) {
  if (n_funcs < 1) throw ArgumentError("build_test_set wants n_funcs >= 1");
  Rng rng(seed, streams::kTestFunctions);
  TestSet ts;
  ts.references.reserve(static_cast<std::size_t>(n_funcs));
  switch (p.kind) {
    case PdeKind::Heat: {
      const int64_t res = resolution > 0 ? resolution : 128;
      ts.functions = sample_dirichlet_grf(rng, n_funcs, sensor_locations_1d(p.default_m));
      const Tensor xs = linspace(0, 1, res), tts = linspace(0, 1, res);
      // The sampler band is m/2 modes, so the series with that many modes is
      // exact for every test function.
      const int64_t K = p.default_m / 2;
      for (int64_t f = 0; f < n_funcs; ++f) {
        Tensor u({ts.functions.at_sensors.dim(1)});
        for (int64_t i = 0; i < u.numel(); ++i) u[i] = ts.functions.at_sensors.at(f, i);
        ts.references.push_back(heat_analytic(u, K, xs, tts));
      }
      break;
    }
    case PdeKind::DiffusionReaction: {
      const int64_t res = resolution > 0 ? resolution : 128;
      JointDraw jd = sample_grf_rbf_joint(rng, n_funcs, sensor_locations_1d(p.default_m),
                                          linspace(0, 1, res));
      ts.functions = std::move(jd.batch);
      for (int64_t f = 0; f < n_funcs; ++f) {
        Tensor u({res});
        for (int64_t i = 0; i < res; ++i) u[i] = jd.at_extra.at(f, i);
        DiffusionReactionConfig cfg;
        cfg.nx = res;
        cfg.nt = res;
        ts.references.push_back(solve_diffusion_reaction(u, cfg));
      }
      break;
    }
    case PdeKind::Advection: {
      const int64_t res = resolution > 0 ? resolution : 128;
      JointDraw jd = sample_advection_coeff_joint(rng, n_funcs,
                                                  sensor_locations_1d(p.default_m),
                                                  linspace(0, 1, res));
      ts.functions = std::move(jd.batch);
      for (int64_t f = 0; f < n_funcs; ++f) {
        Tensor u({res});
        for (int64_t i = 0; i < res; ++i) u[i] = jd.at_extra.at(f, i);
        AdvectionConfig cfg;
        cfg.nx = res;
        cfg.nt = res;
        ts.references.push_back(solve_advection(u, cfg));
      }
      break;
    }
    case PdeKind::Burgers: {
      const int64_t res = resolution > 0 ? resolution : 101;
      ts.functions = sample_periodic_grf(rng, n_funcs, sensor_locations_1d(p.default_m));
      const Tensor u_nodes = ts.functions.eval_1d(burgers_nodes(128));
      for (int64_t f = 0; f < n_funcs; ++f) {
        Tensor u({128});
        for (int64_t i = 0; i < 128; ++i) u[i] = u_nodes.at(f, i);
        BurgersConfig cfg;
        cfg.nx_out = res;
        cfg.nt_out = res;
        ts.references.push_back(solve_burgers(u, cfg));
      }
      break;
    }
    case PdeKind::Diffusion2d: {
      const int64_t res = resolution > 0 ? resolution : 41;
      Tensor sx, sy;
      sensor_grid_2d(p.default_m, sx, sy);
      ts.functions = sample_gaussian_sum_2d(rng, n_funcs, sx, sy);
      const Tensor side = linspace(0, 1, res);
      const Tensor on_grid = ts.functions.eval_2d_grid(side, side);
      for (int64_t f = 0; f < n_funcs; ++f) {
        Tensor ic({res, res});
        for (int64_t i = 0; i < res * res; ++i) ic[i] = on_grid.at(f, i);
        Diffusion2dConfig cfg;
        cfg.n_side = res;
        cfg.nt_out = res;
        ts.references.push_back(solve_diffusion_2d(ic, cfg));
      }
      break;
    }
  }
  return ts;
}

EvalMetrics evaluate(const ModelVariant& model, const TestSet& tests) {
  const Tensor& us = tests.functions.at_sensors;
  const int64_t F = us.dim(0);
  if (static_cast<int64_t>(tests.references.size()) != F) {
    throw DimensionError("test set has " + std::to_string(tests.references.size()) +
                         " references for " + std::to_string(F) + " functions");
  }
  EvalMetrics em;
  em.rel_l2.reserve(static_cast<std::size_t>(F));
  em.rmse.reserve(static_cast<std::size_t>(F));
  for (int64_t f = 0; f < F; ++f) {
    const GridSolution& ref = tests.references[static_cast<std::size_t>(f)];
    const Tensor u_row = row_of(us, f);
    Tensor pred;
    if (const auto* s = std::get_if<SepOnetModel>(&model)) {
      pred = seponet_forward(*s, u_row, ref.axes);
    } else {
      pred = deeponet_forward(std::get<DeepOnetModel>(model), u_row,
                              meshgrid_points(ref.axes));
    }
    if (pred.numel() != ref.values.numel()) {
      throw DimensionError("prediction covers " + std::to_string(pred.numel()) +
                           " points, reference has " + std::to_string(ref.values.numel()));
    }
    double d2 = 0, r2 = 0;
    for (int64_t i = 0; i < pred.numel(); ++i) {
      const double d = static_cast<double>(pred[i]) - static_cast<double>(ref.values[i]);
      d2 += d * d;
      r2 += static_cast<double>(ref.values[i]) * static_cast<double>(ref.values[i]);
    }
    const double rel = r2 > 0 ? std::sqrt(d2 / r2) : (d2 > 0 ? HUGE_VAL : 0.0);
    em.rel_l2.push_back(rel);
    em.rmse.push_back(std::sqrt(d2 / static_cast<double>(pred.numel())));
  }
  auto mean_std = [](const std::vector<double>& v, double* mean, double* sd) {
    double s = 0;
    for (double x : v) s += x;
    *mean = s / static_cast<double>(v.size());
    double q = 0;
    for (double x : v) q += (x - *mean) * (x - *mean);
    *sd = std::sqrt(q / static_cast<double>(v.size()));
  };
  mean_std(em.rel_l2, &em.rel_l2_mean, &em.rel_l2_std);
  mean_std(em.rmse, &em.rmse_mean, &em.rmse_std);
  return em;
}

}  // namespace sepnet
