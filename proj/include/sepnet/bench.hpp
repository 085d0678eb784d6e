#pragma once

#include <string>
#include <vector>

#include "sepnet/train.hpp"

namespace sepnet {

// Benchmark harness: accuracy/time/memory sweeps over dataset sizes, the
// heat-equation rank study, and plot-ready CSV emission. A sweep never dies
// on a bad cell: budget breaches and per-cell failures become report rows
// and the sweep moves on.

// Two sweep axes share one spec: N varies with N_f pinned at fixed_n_funcs,
// and N_f varies with N pinned at fixed_n. A cell sitting on both axes is
// trained once. The training shape is shared by every cell.
struct SweepSpec {
  std::string problem = "diffusion-reaction";
  std::vector<std::string> models = {"seponet", "pideeponet"};
  std::vector<int64_t> n_values = {8, 16, 32};
  std::vector<int64_t> n_func_values = {5, 10, 20};
  int64_t fixed_n = 32;
  int64_t fixed_n_funcs = 20;
  int64_t repetitions = 1;  // seed offsets; the published tables use one run per cell
  uint64_t seed_base = 0;
  int64_t r = 16;
  int64_t width = 25;
  int64_t depth = 4;
  int64_t iterations = 10000;
  int64_t test_funcs = 50;
  double budget_gb = 8.0;
};
SweepSpec parse_sweep_spec(const std::string& json_text);

struct SweepCell {
  int64_t index = 0;
  std::string model;
  int64_t n_funcs = 0;
  int64_t n_per_axis = 0;
  int64_t repetition = 0;
  uint64_t seed = 0;  // seed_base + repetition
};
// Deduplicated cell list in deterministic order (model, then axis values,
// then repetition). Throws ConfigError on an empty or invalid spec.
std::vector<SweepCell> enumerate_cells(const SweepSpec& spec);

struct BenchRow {
  std::string problem;
  std::string model;
  int64_t n_funcs = 0;
  int64_t n_per_axis = 0;  // N
  int64_t n_points = 0;    // N^d for the problem's dimension
  int64_t repetition = 0;
  uint64_t seed = 0;
  std::string status;  // "ok", "skipped-oom", or "failed: <reason>"
  double rel_l2_mean = 0;
  double rel_l2_std = 0;
  double rmse_mean = 0;
  double rmse_std = 0;
  double median_ms_per_iter = 0;
  double total_hours = 0;
  double peak_rss_bytes = 0;
  double logical_peak_bytes = 0;
  double estimated_bytes = 0;  // the budget guard's pre-run estimate
  std::string config_hash;     // FNV-1a of the cell config JSON
  std::string checkpoint;      // stored model file, empty when nothing was persisted
};

struct BenchReport {
  SweepSpec spec;
  std::vector<BenchRow> rows;
};

// Canonical JSON for one cell: every knob that affects the run, in fixed key
// order, so its hash ties each report row to a stored, re-runnable config.
std::string cell_config_json(const SweepSpec& spec, const SweepCell& cell);
std::string fnv1a_hex(const std::string& text);

// Pre-run estimate of the tape's high-water mark for one training iteration.
// Calibrated against the allocator peak on diffusion-reaction desk cells
// (lands within ~1.5x there, on the high side); it guards against gross
// budget breaches, not byte-exact accounting. The fused model carries a
// width*depth term per collocation point; the separable model's trunks only
// see d*N inputs, so its cost is the output grids alone.
double estimate_cell_bytes(const PdeProblem& p, const std::string& model, int64_t n_funcs,
                           int64_t n_per_axis, int64_t width, int64_t depth);

// Trains and evaluates one cell. Over-budget cells return a "skipped-oom"
// row without training; any exception becomes a "failed: ..." row. When
// out_dir is nonempty the cell writes cells/<index>_<hash>.json and a
// matching .sepm checkpoint there.
BenchRow run_cell(const SweepSpec& spec, const SweepCell& cell, const std::string& out_dir = "");

// Runs every cell in order. With out_dir set, report.csv is rewritten after
// each cell so a killed sweep still leaves the finished rows on disk.
BenchReport run_sweep(const SweepSpec& spec, const std::string& out_dir = "");

void write_report_csv(const std::string& path, const BenchReport& report);

// One CSV per metric and sweep axis, eight files total:
//   {rel_l2, rmse, time, memory}_vs_{points, functions}.csv
// Each carries the row-identity columns plus that metric's columns from the
// report schema. The points files hold rows with n_funcs == fixed_n_funcs,
// the functions files rows with n_per_axis == fixed_n; a cell on both axes
// appears in both. An empty report yields header-only files.
void emit_plot_data(const BenchReport& report, const std::string& out_dir);

// Rank study on the heat problem: how the learned separable basis compares
// with the separation-of-variables modes, and how accuracy tracks the
// truncated analytic series as the rank grows.
struct RankStudyConfig {
  std::vector<int64_t> ranks = {1, 2, 4, 8, 16};
  std::vector<int64_t> series_ranks = {1, 2, 4, 8, 16};  // K terms of the series
  int64_t n_funcs = 20;
  int64_t n_per_axis = 32;
  int64_t width = 25;
  int64_t depth = 4;
  int64_t iterations = 10000;
  int64_t test_funcs = 100;
  int64_t dense_points = 256;  // resolution of the basis dumps
  uint64_t seed = 0;
};

struct RankRow {
  int64_t r = 0;
  double rmse_mean = 0;
  double rel_l2_mean = 0;
  double final_loss = 0;
  double seconds = 0;
};
struct SeriesRow {
  int64_t K = 0;
  double rmse_mean = 0;  // truncated series vs the full-rank references
};
struct RankStudyResult {
  std::vector<RankRow> ranks;
  std::vector<SeriesRow> series;
  Tensor grid;                        // dense coordinates shared by both axes
  std::vector<Tensor> spatial_bases;  // per rank entry: [dense x r], trunk 0
  std::vector<Tensor> temporal_bases;  // trunk 1
};
RankStudyResult rank_study(const RankStudyConfig& cfg);

// rank_rmse.csv, series_rmse.csv, and one grid dump per basis per rank.
void write_rank_study(const RankStudyResult& res, const std::string& out_dir);

// Signed cosine similarity <a,b>/(|a||b|); 0 when either norm vanishes.
// Basis comparisons take the absolute value since a learned mode's sign is
// arbitrary (the branch coefficient absorbs it).
double cosine_similarity(const Tensor& a, const Tensor& b);

}  // namespace sepnet
