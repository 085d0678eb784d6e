// Command-line front end: train one model, dump reference solutions, run a
// benchmark sweep (optionally across worker processes), or run the heat
// rank study. Every subcommand writes machine-readable files into --out.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sepnet/bench.hpp"
#include "sepnet/errors.hpp"
#include "sepnet/griddump.hpp"

using namespace sepnet;
using nlohmann::json;

namespace {

int usage(FILE* to) {
  std::fprintf(to,
               "usage: sepnet <subcommand> [flags]\n"
               "\n"
               "  train      --config cfg.json --out dir\n"
               "             Train one model; writes model.sepm, loss.csv,\n"
               "             telemetry.json and the resolved config.json.\n"
               "  reference  --problem name --out dir [--count K] [--seed S]\n"
               "             [--resolution R]\n"
               "             Draw K test functions and write one reference\n"
               "             solution per function in the grid-dump format.\n"
               "  benchmark  --spec spec.json --out dir [--budget-gb G]\n"
               "             [--parallel P] [--cell I]\n"
               "             Run a sweep; writes report.csv, per-cell configs\n"
               "             and checkpoints, and plots/*.csv. --parallel\n"
               "             fans cells out to worker processes; --cell runs\n"
               "             a single cell (used internally by --parallel).\n"
               "  rank-study --out dir [--iterations I] [--seed S]\n"
               "             Heat-equation rank study; writes rank_rmse.csv,\n"
               "             series_rmse.csv and the learned basis dumps.\n");
  return to == stderr ? 1 : 0;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Flags are --name value pairs; unknown names and missing values are errors.
std::map<std::string, std::string> parse_flags(int argc, char** argv, int from,
                                               const std::vector<std::string>& known) {
  std::map<std::string, std::string> flags;
  for (int i = from; i < argc; ++i) {
    std::string name = argv[i];
    if (name.rfind("--", 0) != 0) throw ConfigError("expected a --flag, got '" + name + "'");
    name = name.substr(2);
    bool ok = false;
    for (const std::string& k : known) ok = ok || k == name;
    if (!ok) throw ConfigError("unknown flag '--" + name + "'");
    if (i + 1 >= argc) throw ConfigError("flag '--" + name + "' wants a value");
    flags[name] = argv[++i];
  }
  return flags;
}

std::string require_flag(const std::map<std::string, std::string>& flags,
                         const std::string& name) {
  auto it = flags.find(name);
  if (it == flags.end()) throw ConfigError("missing required flag '--" + name + "'");
  return it->second;
}

int64_t to_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    int64_t v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + " wants an integer, got '" + s + "'");
  }
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + " wants a number, got '" + s + "'");
  }
}

int cmd_train(const std::map<std::string, std::string>& flags) {
  const std::string out = require_flag(flags, "out");
  TrainConfig cfg = parse_train_config(slurp(require_flag(flags, "config")));
  std::filesystem::create_directories(out);

  TrainResult res = train(cfg);
  const auto dir = std::filesystem::path(out);
  save_checkpoint((dir / "model.sepm").string(), res.model, res.adam);
  write_loss_csv((dir / "loss.csv").string(), res.history);

  json t;
  t["median_ms_per_iter"] = res.telemetry.median_ms_per_iter;
  t["total_seconds"] = res.telemetry.total_seconds;
  t["peak_rss_mb"] = res.telemetry.peak_rss_mb;
  t["logical_peak_mb"] = res.telemetry.logical_peak_mb;
  t["methodology"] = res.telemetry.methodology;
  t["iterations_run"] = res.history.size();
  t["aborted"] = res.aborted;
  t["abort_reason"] = res.abort_reason;
  std::ofstream(dir / "telemetry.json") << t.dump(2) << "\n";

  json c;
  c["problem"] = cfg.problem;
  c["model"] = cfg.model;
  c["n_funcs"] = cfg.n_funcs;
  c["n_per_axis"] = cfg.n_per_axis;
  c["r"] = cfg.r;
  c["width"] = cfg.width;
  c["depth"] = cfg.depth;
  c["iterations"] = cfg.iterations;
  c["base_lr"] = cfg.base_lr;
  c["decay"] = cfg.decay;
  c["decay_every"] = cfg.decay_every;
  c["resample_every"] = cfg.resample_every;
  c["lambda_i"] = cfg.lambda_I;
  c["lambda_b"] = cfg.lambda_b;
  c["seed"] = cfg.seed;
  c["precision"] = sizeof(real) == 8 ? "f64" : "f32";
  std::ofstream(dir / "config.json") << c.dump(2) << "\n";

  if (res.aborted) {
    std::fprintf(stderr, "training aborted: %s\n", res.abort_reason.c_str());
    return 1;
  }
  std::printf("trained %s on %s: final loss %.6g, %.3f ms/iter, wrote %s\n", cfg.model.c_str(),
              cfg.problem.c_str(), res.history.empty() ? 0.0 : res.history.back().total,
              res.telemetry.median_ms_per_iter, out.c_str());
  return 0;
}

int cmd_reference(const std::map<std::string, std::string>& flags) {
  const std::string out = require_flag(flags, "out");
  const std::string problem = require_flag(flags, "problem");
  const int64_t count = flags.count("count") ? to_int(flags.at("count"), "--count") : 10;
  const uint64_t seed =
      flags.count("seed") ? static_cast<uint64_t>(to_int(flags.at("seed"), "--seed")) : 0;
  const int64_t resolution =
      flags.count("resolution") ? to_int(flags.at("resolution"), "--resolution") : 0;

  const PdeProblem p = make_problem(problem);
  TestSet tests = build_test_set(p, seed, count, resolution);
  std::filesystem::create_directories(out);
  const auto dir = std::filesystem::path(out);

  for (int64_t i = 0; i < count; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "ref_%03lld.sepg", static_cast<long long>(i));
    save_grid((dir / name).string(), tests.references[i]);
  }
  // The sampled inputs ride along so the dataset is self-contained: values
  // at the sensors, indexed by (function, sensor).
  GridSolution funcs;
  const Tensor& at = tests.functions.at_sensors;
  Tensor fi({at.dim(0)}), si({at.dim(1)});
  for (int64_t i = 0; i < at.dim(0); ++i) fi[i] = static_cast<real>(i);
  for (int64_t j = 0; j < at.dim(1); ++j) si[j] = static_cast<real>(j);
  funcs.axes = {fi, si};
  funcs.values = at;
  funcs.descriptor = tests.functions.descriptor;
  save_grid((dir / "functions.sepg").string(), funcs);

  std::printf("wrote %lld %s reference solutions and functions.sepg to %s\n",
              static_cast<long long>(count), problem.c_str(), out.c_str());
  return 0;
}

json row_to_json(const BenchRow& r) {
  json j;
  j["problem"] = r.problem;
  j["model"] = r.model;
  j["n_funcs"] = r.n_funcs;
  j["n_per_axis"] = r.n_per_axis;
  j["n_points"] = r.n_points;
  j["repetition"] = r.repetition;
  j["seed"] = r.seed;
  j["status"] = r.status;
  j["rel_l2_mean"] = r.rel_l2_mean;
  j["rel_l2_std"] = r.rel_l2_std;
  j["rmse_mean"] = r.rmse_mean;
  j["rmse_std"] = r.rmse_std;
  j["median_ms_per_iter"] = r.median_ms_per_iter;
  j["total_hours"] = r.total_hours;
  j["peak_rss_bytes"] = r.peak_rss_bytes;
  j["logical_peak_bytes"] = r.logical_peak_bytes;
  j["estimated_bytes"] = r.estimated_bytes;
  j["config_hash"] = r.config_hash;
  j["checkpoint"] = r.checkpoint;
  return j;
}

BenchRow row_from_json(const json& j) {
  BenchRow r;
  r.problem = j.at("problem");
  r.model = j.at("model");
  r.n_funcs = j.at("n_funcs");
  r.n_per_axis = j.at("n_per_axis");
  r.n_points = j.at("n_points");
  r.repetition = j.at("repetition");
  r.seed = j.at("seed");
  r.status = j.at("status");
  r.rel_l2_mean = j.at("rel_l2_mean");
  r.rel_l2_std = j.at("rel_l2_std");
  r.rmse_mean = j.at("rmse_mean");
  r.rmse_std = j.at("rmse_std");
  r.median_ms_per_iter = j.at("median_ms_per_iter");
  r.total_hours = j.at("total_hours");
  r.peak_rss_bytes = j.at("peak_rss_bytes");
  r.logical_peak_bytes = j.at("logical_peak_bytes");
  r.estimated_bytes = j.at("estimated_bytes");
  r.config_hash = j.at("config_hash");
  r.checkpoint = j.at("checkpoint");
  return r;
}

std::string row_path(const std::string& out, int64_t index) {
  return (std::filesystem::path(out) / "cells" /
          ("row_" + std::to_string(index) + ".json"))
      .string();
}

// Fan the cells out to at most `workers` child processes, each re-invoking
// this binary with --cell. The parent is the only writer of report.csv.
BenchReport parallel_sweep(const SweepSpec& spec, const std::string& out,
                           const std::string& spec_path, double budget_flag, bool have_budget,
                           int64_t workers) {
  const std::vector<SweepCell> cells = enumerate_cells(spec);
  std::filesystem::create_directories(std::filesystem::path(out) / "cells");

  char exe[4096];
  const ssize_t n = readlink("/proc/self/exe", exe, sizeof(exe) - 1);
  if (n <= 0) throw ConfigError("cannot resolve own executable for --parallel");
  exe[n] = '\0';

  std::map<pid_t, int64_t> active;
  std::size_t next = 0;
  std::vector<int> worker_status(cells.size(), 0);
  while (next < cells.size() || !active.empty()) {
    while (static_cast<int64_t>(active.size()) < workers && next < cells.size()) {
      const std::string cell_arg = std::to_string(cells[next].index);
      const std::string budget_arg = have_budget ? std::to_string(budget_flag) : "";
      pid_t pid = fork();
      if (pid < 0) throw ConfigError("fork failed");
      if (pid == 0) {
        std::vector<const char*> argv{exe,    "benchmark", "--spec", spec_path.c_str(),
                                      "--out", out.c_str(), "--cell", cell_arg.c_str()};
        if (have_budget) {
          argv.push_back("--budget-gb");
          argv.push_back(budget_arg.c_str());
        }
        argv.push_back(nullptr);
        execv(exe, const_cast<char* const*>(argv.data()));
        std::perror("execv");
        _exit(127);
      }
      active[pid] = cells[next].index;
      ++next;
    }
    int status = 0;
    pid_t done = waitpid(-1, &status, 0);
    if (done > 0) {
      worker_status[static_cast<std::size_t>(active[done])] = status;
      active.erase(done);
    }
  }

  BenchReport report;
  report.spec = spec;
  for (const SweepCell& cell : cells) {
    const std::string path = row_path(out, cell.index);
    std::ifstream f(path);
    if (f) {
      report.rows.push_back(row_from_json(json::parse(f)));
    } else {
      // The worker died before writing its row; record that like any other
      // per-cell failure and keep going.
      BenchRow dead;
      dead.problem = spec.problem;
      dead.model = cell.model;
      dead.n_funcs = cell.n_funcs;
      dead.n_per_axis = cell.n_per_axis;
      dead.n_points = 1;
      for (int i = 0; i < make_problem(spec.problem).dim; ++i) dead.n_points *= cell.n_per_axis;
      dead.repetition = cell.repetition;
      dead.seed = cell.seed;
      dead.config_hash = fnv1a_hex(cell_config_json(spec, cell));
      dead.status =
          "failed: worker exited with status " +
          std::to_string(worker_status[static_cast<std::size_t>(cell.index)]);
      report.rows.push_back(dead);
    }
  }
  write_report_csv((std::filesystem::path(out) / "report.csv").string(), report);
  return report;
}

int cmd_benchmark(const std::map<std::string, std::string>& flags) {
  const std::string out = require_flag(flags, "out");
  const std::string spec_path = require_flag(flags, "spec");
  SweepSpec spec = parse_sweep_spec(slurp(spec_path));
  const bool have_budget = flags.count("budget-gb") > 0;
  if (have_budget) spec.budget_gb = to_double(flags.at("budget-gb"), "--budget-gb");

  if (flags.count("cell")) {
    // Worker mode: run exactly one cell and leave a row file for the parent.
    const int64_t index = to_int(flags.at("cell"), "--cell");
    const std::vector<SweepCell> cells = enumerate_cells(spec);
    if (index < 0 || index >= static_cast<int64_t>(cells.size())) {
      throw ConfigError("--cell index out of range");
    }
    BenchRow row = run_cell(spec, cells[static_cast<std::size_t>(index)], out);
    std::filesystem::create_directories(std::filesystem::path(out) / "cells");
    std::ofstream f(row_path(out, index));
    if (!f) throw ConfigError("cannot write row file");
    f << row_to_json(row).dump(2) << "\n";
    return 0;
  }

  const int64_t workers = flags.count("parallel") ? to_int(flags.at("parallel"), "--parallel") : 1;
  if (workers < 1) throw ConfigError("--parallel wants a positive worker count");

  BenchReport report =
      workers == 1 ? run_sweep(spec, out)
                   : parallel_sweep(spec, out, spec_path, spec.budget_gb, have_budget, workers);
  emit_plot_data(report, (std::filesystem::path(out) / "plots").string());

  int64_t ok = 0, skipped = 0, failed = 0;
  for (const BenchRow& r : report.rows) {
    if (r.status == "ok") ++ok;
    else if (r.status == "skipped-oom") ++skipped;
    else ++failed;
  }
  std::printf("sweep finished: %lld ok, %lld skipped-oom, %lld failed; report at %s/report.csv\n",
              static_cast<long long>(ok), static_cast<long long>(skipped),
              static_cast<long long>(failed), out.c_str());
  return failed == 0 ? 0 : 1;
}

int cmd_rank_study(const std::map<std::string, std::string>& flags) {
  const std::string out = require_flag(flags, "out");
  RankStudyConfig cfg;
  if (flags.count("iterations")) cfg.iterations = to_int(flags.at("iterations"), "--iterations");
  if (flags.count("seed")) cfg.seed = static_cast<uint64_t>(to_int(flags.at("seed"), "--seed"));
  RankStudyResult res = rank_study(cfg);
  write_rank_study(res, out);
  std::printf("rank study finished: %zu ranks, %zu series points; results in %s\n",
              res.ranks.size(), res.series.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage(stderr);
  const std::string cmd = argv[1];
  if (cmd == "--help" || cmd == "-h" || cmd == "help") return usage(stdout);
  try {
    if (cmd == "train") {
      return cmd_train(parse_flags(argc, argv, 2, {"config", "out"}));
    }
    if (cmd == "reference") {
      return cmd_reference(
          parse_flags(argc, argv, 2, {"problem", "out", "count", "seed", "resolution"}));
    }
    if (cmd == "benchmark") {
      return cmd_benchmark(
          parse_flags(argc, argv, 2, {"spec", "out", "budget-gb", "parallel", "cell"}));
    }
    if (cmd == "rank-study") {
      return cmd_rank_study(parse_flags(argc, argv, 2, {"out", "iterations", "seed"}));
    }
    std::fprintf(stderr, "unknown subcommand '%s'\n", cmd.c_str());
    return usage(stderr);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sepnet %s: %s\n", cmd.c_str(), e.what());
    return 1;
  }
}
