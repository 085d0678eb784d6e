#include "sepnet/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "sepnet/errors.hpp"
#include "sepnet/griddump.hpp"

namespace sepnet {
namespace {

using nlohmann::json;

// Commas and newlines inside a failure reason would break the CSV row.
std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Tensor row1d(const Tensor& t, int64_t i) {
  Tensor out({t.dim(1)});
  for (int64_t j = 0; j < t.dim(1); ++j) out[j] = t.at(i, j);
  return out;
}

double rmse_between(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) {
    throw DimensionError("rmse wants matching sizes, got " + std::to_string(a.numel()) +
                         " and " + std::to_string(b.numel()));
  }
  double acc = 0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.numel()));
}

void require_open(std::ofstream& f, const std::string& path) {
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
}

const char* kRowIdentity =
    "problem,model,n_funcs,n_per_axis,n_points,repetition,seed,status,config_hash";

std::string identity_fields(const BenchRow& r) {
  return r.problem + "," + r.model + "," + std::to_string(r.n_funcs) + "," +
         std::to_string(r.n_per_axis) + "," + std::to_string(r.n_points) + "," +
         std::to_string(r.repetition) + "," + std::to_string(r.seed) + "," +
         csv_safe(r.status) + "," + r.config_hash;
}

TrainConfig cell_train_config(const SweepSpec& spec, const SweepCell& cell) {
  TrainConfig tc;
  tc.problem = spec.problem;
  tc.model = cell.model;
  tc.n_funcs = cell.n_funcs;
  tc.n_per_axis = cell.n_per_axis;
  tc.r = spec.r;
  tc.width = spec.width;
  tc.depth = spec.depth;
  tc.iterations = spec.iterations;
  tc.seed = cell.seed;
  return tc;
}

}  // namespace

SweepSpec parse_sweep_spec(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ConfigError("sweep spec must be a JSON object");
  }
  static const std::set<std::string> known{
      "problem",     "models",     "n_values", "n_func_values", "fixed_n",
      "fixed_n_funcs", "repetitions", "seed_base", "r",          "width",
      "depth",       "iterations", "test_funcs", "budget_gb"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown sweep spec key '" + key + "'");
  }
  SweepSpec s;
  s.problem = j.value("problem", s.problem);
  s.models = j.value("models", s.models);
  s.n_values = j.value("n_values", s.n_values);
  s.n_func_values = j.value("n_func_values", s.n_func_values);
  s.fixed_n = j.value("fixed_n", s.fixed_n);
  s.fixed_n_funcs = j.value("fixed_n_funcs", s.fixed_n_funcs);
  s.repetitions = j.value("repetitions", s.repetitions);
  s.seed_base = j.value("seed_base", s.seed_base);
  s.r = j.value("r", s.r);
  s.width = j.value("width", s.width);
  s.depth = j.value("depth", s.depth);
  s.iterations = j.value("iterations", s.iterations);
  s.test_funcs = j.value("test_funcs", s.test_funcs);
  s.budget_gb = j.value("budget_gb", s.budget_gb);
  return s;
}

std::vector<SweepCell> enumerate_cells(const SweepSpec& spec) {
  make_problem(spec.problem);  // rejects unknown problems up front
  if (spec.repetitions < 1) throw ConfigError("repetitions must be positive");
  if (spec.fixed_n < 1 || spec.fixed_n_funcs < 1) {
    throw ConfigError("fixed sweep values must be positive");
  }
  for (int64_t n : spec.n_values) {
    if (n < 1) throw ConfigError("n_values must be positive");
  }
  for (int64_t f : spec.n_func_values) {
    if (f < 1) throw ConfigError("n_func_values must be positive");
  }
  // An empty axis list just means that axis is not swept; both empty (or no
  // models) gives an empty sweep and an empty report.
  std::vector<SweepCell> cells;
  std::set<std::tuple<std::string, int64_t, int64_t, int64_t>> seen;
  auto push = [&](const std::string& model, int64_t n_funcs, int64_t n, int64_t rep) {
    if (!seen.insert({model, n_funcs, n, rep}).second) return;
    SweepCell c;
    c.index = static_cast<int64_t>(cells.size());
    c.model = model;
    c.n_funcs = n_funcs;
    c.n_per_axis = n;
    c.repetition = rep;
    c.seed = spec.seed_base + static_cast<uint64_t>(rep);
    cells.push_back(c);
  };
  for (const std::string& model : spec.models) {
    for (int64_t rep = 0; rep < spec.repetitions; ++rep) {
      for (int64_t n : spec.n_values) push(model, spec.fixed_n_funcs, n, rep);
      for (int64_t f : spec.n_func_values) push(model, f, spec.fixed_n, rep);
    }
  }
  return cells;
}

std::string cell_config_json(const SweepSpec& spec, const SweepCell& cell) {
  json j;
  j["problem"] = spec.problem;
  j["model"] = cell.model;
  j["n_funcs"] = cell.n_funcs;
  j["n_per_axis"] = cell.n_per_axis;
  j["r"] = spec.r;
  j["width"] = spec.width;
  j["depth"] = spec.depth;
  j["iterations"] = spec.iterations;
  j["test_funcs"] = spec.test_funcs;
  j["test_seed"] = spec.seed_base;
  j["seed"] = cell.seed;
  j["repetition"] = cell.repetition;
  j["precision"] = sizeof(real) == 8 ? "f64" : "f32";
  return j.dump(2);  // nlohmann keeps keys sorted, so the hash is canonical
}

std::string fnv1a_hex(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double estimate_cell_bytes(const PdeProblem& p, const std::string& model, int64_t n_funcs,
                           int64_t n_per_axis, int64_t width, int64_t depth) {
  const double F = static_cast<double>(n_funcs);
  const double N = static_cast<double>(n_per_axis);
  const double P = std::pow(N, p.dim);
  // Branch activations plus sampler/bookkeeping floor.
  const double base =
      F * (static_cast<double>(p.default_m) + 6.0 * static_cast<double>(width * depth)) + 200000.0;
  double reals;
  if (model == "seponet") {
    // Output grids dominate; the trunks only ever see d*N scalar inputs.
    reals = 30.0 * F * P + 12.0 * p.dim * N * static_cast<double>(width * depth) + base;
  } else {
    // The fused trunk carries value/derivative jets through every layer for
    // each of the N^d collocation points.
    reals = 30.0 * F * P + 30.0 * static_cast<double>(width * depth) * P + base;
  }
  return 8.0 * reals;
}

BenchRow run_cell(const SweepSpec& spec, const SweepCell& cell, const std::string& out_dir) {
  const PdeProblem p = make_problem(spec.problem);
  BenchRow row;
  row.problem = spec.problem;
  row.model = cell.model;
  row.n_funcs = cell.n_funcs;
  row.n_per_axis = cell.n_per_axis;
  row.n_points = 1;
  for (int i = 0; i < p.dim; ++i) row.n_points *= cell.n_per_axis;
  row.repetition = cell.repetition;
  row.seed = cell.seed;
  const std::string config = cell_config_json(spec, cell);
  row.config_hash = fnv1a_hex(config);
  row.estimated_bytes =
      estimate_cell_bytes(p, cell.model, cell.n_funcs, cell.n_per_axis, spec.width, spec.depth);

  std::string cell_stem;
  if (!out_dir.empty()) {
    const auto dir = std::filesystem::path(out_dir) / "cells";
    std::filesystem::create_directories(dir);
    cell_stem = (dir / (std::to_string(cell.index) + "_" + row.config_hash)).string();
    std::ofstream f(cell_stem + ".json");
    require_open(f, cell_stem + ".json");
    f << config << "\n";
  }

  if (row.estimated_bytes > spec.budget_gb * 1073741824.0) {
    row.status = "skipped-oom";
    return row;
  }

  try {
    TrainResult res = train(cell_train_config(spec, cell));
    if (res.aborted) {
      row.status = "failed: " + res.abort_reason;
      return row;
    }
    // One test set per sweep (seeded by seed_base, not the cell seed) so
    // every cell is scored against the same functions.
    TestSet tests = build_test_set(p, spec.seed_base, spec.test_funcs);
    EvalMetrics ev = evaluate(res.model, tests);
    row.rel_l2_mean = ev.rel_l2_mean;
    row.rel_l2_std = ev.rel_l2_std;
    row.rmse_mean = ev.rmse_mean;
    row.rmse_std = ev.rmse_std;
    row.median_ms_per_iter = res.telemetry.median_ms_per_iter;
    row.total_hours = res.telemetry.total_seconds / 3600.0;
    row.peak_rss_bytes = res.telemetry.peak_rss_mb * 1048576.0;
    row.logical_peak_bytes = res.telemetry.logical_peak_mb * 1048576.0;
    if (!cell_stem.empty()) {
      save_checkpoint(cell_stem + ".sepm", res.model, res.adam);
      row.checkpoint = cell_stem + ".sepm";
    }
    row.status = "ok";
  } catch (const std::exception& e) {
    row.status = std::string("failed: ") + e.what();
  }
  return row;
}

BenchReport run_sweep(const SweepSpec& spec, const std::string& out_dir) {
  const std::vector<SweepCell> cells = enumerate_cells(spec);
  BenchReport report;
  report.spec = spec;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_report_csv((std::filesystem::path(out_dir) / "report.csv").string(), report);
  }
  for (const SweepCell& cell : cells) {
    report.rows.push_back(run_cell(spec, cell, out_dir));
    if (!out_dir.empty()) {
      // Rewritten after every cell; a killed sweep keeps its finished rows.
      write_report_csv((std::filesystem::path(out_dir) / "report.csv").string(), report);
    }
  }
  return report;
}

void write_report_csv(const std::string& path, const BenchReport& report) {
  std::ofstream f(path);
  require_open(f, path);
  f << kRowIdentity
    << ",rel_l2_mean,rel_l2_std,rmse_mean,rmse_std,median_ms_per_iter,total_hours,"
       "peak_rss_bytes,logical_peak_bytes,estimated_bytes,checkpoint\n";
  for (const BenchRow& r : report.rows) {
    f << identity_fields(r) << "," << fmt(r.rel_l2_mean) << "," << fmt(r.rel_l2_std) << ","
      << fmt(r.rmse_mean) << "," << fmt(r.rmse_std) << "," << fmt(r.median_ms_per_iter) << ","
      << fmt(r.total_hours) << "," << fmt(r.peak_rss_bytes) << "," << fmt(r.logical_peak_bytes)
      << "," << fmt(r.estimated_bytes) << "," << csv_safe(r.checkpoint) << "\n";
  }
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

void emit_plot_data(const BenchReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  struct Metric {
    const char* name;
    const char* columns;
    std::vector<double> (*values)(const BenchRow&);
  };
  static const Metric metrics[] = {
      {"rel_l2", "rel_l2_mean,rel_l2_std",
       [](const BenchRow& r) { return std::vector<double>{r.rel_l2_mean, r.rel_l2_std}; }},
      {"rmse", "rmse_mean,rmse_std",
       [](const BenchRow& r) { return std::vector<double>{r.rmse_mean, r.rmse_std}; }},
      {"time", "median_ms_per_iter,total_hours",
       [](const BenchRow& r) { return std::vector<double>{r.median_ms_per_iter, r.total_hours}; }},
      {"memory", "peak_rss_bytes,logical_peak_bytes,estimated_bytes",
       [](const BenchRow& r) {
         return std::vector<double>{r.peak_rss_bytes, r.logical_peak_bytes, r.estimated_bytes};
       }},
  };
  for (const Metric& m : metrics) {
    for (const char* axis : {"points", "functions"}) {
      const bool points = std::string(axis) == "points";
      const std::string path =
          (std::filesystem::path(out_dir) / (std::string(m.name) + "_vs_" + axis + ".csv"))
              .string();
      std::ofstream f(path);
      require_open(f, path);
      f << kRowIdentity << "," << m.columns << "\n";
      for (const BenchRow& r : report.rows) {
        const bool on_axis = points ? r.n_funcs == report.spec.fixed_n_funcs
                                    : r.n_per_axis == report.spec.fixed_n;
        if (!on_axis) continue;
        f << identity_fields(r);
        for (double v : m.values(r)) f << "," << fmt(v);
        f << "\n";
      }
      if (!f) throw ConfigError("failed writing '" + path + "'");
    }
  }
}

RankStudyResult rank_study(const RankStudyConfig& cfg) {
  if (cfg.ranks.empty()) throw ConfigError("rank study wants at least one rank");
  if (cfg.dense_points < 2) throw ConfigError("dense_points must be at least 2");
  const PdeProblem p = make_problem("heat");
  const TestSet tests = build_test_set(p, cfg.seed, cfg.test_funcs);
  const int64_t F = tests.functions.n_funcs();

  RankStudyResult out;
  out.grid = linspace(0, 1, cfg.dense_points);

  // Truncated analytic series scored against the full-rank references; this
  // needs no training and anchors what each rank could achieve at best.
  for (int64_t K : cfg.series_ranks) {
    double acc = 0;
    for (int64_t i = 0; i < F; ++i) {
      const GridSolution& ref = tests.references[i];
      GridSolution trunc = heat_analytic(row1d(tests.functions.at_sensors, i), K, ref.axes[0],
                                         ref.axes[1]);
      acc += rmse_between(trunc.values, ref.values);
    }
    out.series.push_back({K, acc / static_cast<double>(F)});
  }

  for (int64_t r : cfg.ranks) {
    TrainConfig tc;
    tc.problem = "heat";
    tc.model = "seponet";
    tc.n_funcs = cfg.n_funcs;
    tc.n_per_axis = cfg.n_per_axis;
    tc.r = r;
    tc.width = cfg.width;
    tc.depth = cfg.depth;
    tc.iterations = cfg.iterations;
    tc.seed = cfg.seed;
    TrainResult res = train(tc);
    EvalMetrics ev = evaluate(res.model, tests);
    RankRow row;
    row.r = r;
    row.rmse_mean = ev.rmse_mean;
    row.rel_l2_mean = ev.rel_l2_mean;
    row.final_loss = res.history.empty() ? 0 : res.history.back().total;
    row.seconds = res.telemetry.total_seconds;
    out.ranks.push_back(row);

    const auto& model = std::get<SepOnetModel>(res.model);
    Tensor col({cfg.dense_points, 1});
    for (int64_t i = 0; i < cfg.dense_points; ++i) col.at(i, 0) = out.grid[i];
    out.spatial_bases.push_back(mlp_forward(model.trunks[0], col));
    out.temporal_bases.push_back(mlp_forward(model.trunks[1], col));
  }
  return out;
}

void write_rank_study(const RankStudyResult& res, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    const std::string path = (std::filesystem::path(out_dir) / "rank_rmse.csv").string();
    std::ofstream f(path);
    require_open(f, path);
    f << "r,rmse_mean,rel_l2_mean,final_loss,seconds\n";
    for (const RankRow& r : res.ranks) {
      f << r.r << "," << fmt(r.rmse_mean) << "," << fmt(r.rel_l2_mean) << ","
        << fmt(r.final_loss) << "," << fmt(r.seconds) << "\n";
    }
  }
  {
    const std::string path = (std::filesystem::path(out_dir) / "series_rmse.csv").string();
    std::ofstream f(path);
    require_open(f, path);
    f << "K,rmse_mean\n";
    for (const SeriesRow& s : res.series) f << s.K << "," << fmt(s.rmse_mean) << "\n";
  }
  for (std::size_t i = 0; i < res.ranks.size(); ++i) {
    const int64_t r = res.ranks[i].r;
    Tensor mode_index({r});
    for (int64_t k = 0; k < r; ++k) mode_index[k] = static_cast<real>(k);
    const char* names[] = {"spatial", "temporal"};
    const Tensor* bases[] = {&res.spatial_bases[i], &res.temporal_bases[i]};
    for (int b = 0; b < 2; ++b) {
      GridSolution g;
      g.axes = {res.grid, mode_index};
      g.values = *bases[b];
      g.descriptor = std::string("{\"study\":\"rank\",\"basis\":\"") + names[b] +
                     "\",\"rank\":" + std::to_string(r) + "}";
      const std::string path =
          (std::filesystem::path(out_dir) /
           (std::string("basis_") + names[b] + "_r" + std::to_string(r) + ".sepg"))
              .string();
      save_grid(path, g);
    }
  }
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) {
    throw DimensionError("cosine similarity wants matching sizes, got " +
                         std::to_string(a.numel()) + " and " + std::to_string(b.numel()));
  }
  double dot = 0, na = 0, nb = 0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
  }
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace sepnet
