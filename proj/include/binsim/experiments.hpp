#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "binsim/analysis.hpp"
#include "binsim/process.hpp"

namespace binsim {

enum class Scenario : int {
  maxload1 = 0,
  maxload2 = 1,
  smoothness = 2,
  lowerbound = 3,
  selfstab = 4,
  driftval = 5,
};

const char* scenario_name(Scenario s);
bool scenario_from_name(const std::string& name, Scenario& out);

enum class HorizonRule : int {
  scenario_default = 0,  // warm-up multiple, or the theorem formula for lowerbound
  fixed_rounds = 1,
  warmup_multiple = 2,
  lowerbound_formula = 3,
};

struct ExperimentSpec {
  Scenario scenario = Scenario::maxload2;
  std::vector<int> n_grid{64};
  std::vector<double> lambda_grid{0.9};
  int trials = 100;
  HorizonRule horizon = HorizonRule::scenario_default;
  long long fixed_rounds = 0;
  double warmup_factor = 10.0;
  std::vector<long long> snapshot_times;  // derived from the horizon rule when empty
  double alpha = 0.1;
  std::uint64_t seed = 1;
  int d_override = 0;  // 0: scenario picks d (1 for maxload1/lowerbound, else 2)
  int threads = 1;
  long long drift_samples = 4000;  // per-configuration samples, driftval only

  void validate() const;
};

// One output row per (grid cell, trial, snapshot); mirrors the CSV schema.
// The scenario label is a string so the plain `run` subcommand can reuse the
// same writers.
struct ResultRow {
  std::string scenario;
  int n = 0;
  double lambda = 0.0;
  int d = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  int trial = 0;
  long long snapshot_t = 0;
  long long max_load = 0;
  long long min_load = 0;
  long long spread = 0;
  long long psi = 0;
  double phi = 0.0;
  double gamma = 0.0;
  double ratio = 0.0;
  bool pass = true;
};

struct QuantileStats {
  double mean = 0.0;
  double sd = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double q95 = 0.0;
  double q99 = 0.0;
};

// Exact order statistics over a cell's trials (small trial counts, so no
// sketching; quantile = smallest sample at cumulative rank >= p).
QuantileStats quantile_stats(std::vector<double> values);

struct CellStats {
  int n = 0;
  double lambda = 0.0;
  long long snapshot_t = 0;
  QuantileStats max_load;
  QuantileStats spread;
  QuantileStats psi;
  QuantileStats phi;
  double ratio = 0.0;          // scenario's normalized cell statistic (q95-based)
  double psi_ratio = 0.0;      // maxload2 only: q95 psi over the smooth-load bound
  double pass_fraction = 0.0;  // fraction of trials whose row bound held
  bool pass = false;
};

struct ExperimentResult {
  Scenario scenario = Scenario::maxload2;
  int d = 0;
  std::vector<ResultRow> rows;    // grid order, then trial, then snapshot
  std::vector<CellStats> cells;   // grid order, then snapshot
  std::map<std::string, double> metrics;
  bool pass = false;
};

// Rounds until the first snapshot for a grid cell under the spec's horizon
// rule. The warm-up denominator 1-lambda is clamped below at 0.01 so
// lambda = 1 stays finite at desk scale.
long long horizon_rounds(const ExperimentSpec& spec, int n, double lambda);

// Reproduces one theorem-level claim at desk scale; a pure function of the
// spec (identical spec, identical result).
ExperimentResult run_scenario(const ExperimentSpec& spec);

}  // namespace binsim
