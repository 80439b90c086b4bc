#pragma once

#include <string>
#include <vector>

#include "binsim/analysis.hpp"
#include "binsim/experiments.hpp"
#include "binsim/results.hpp"

namespace binsim {

enum class Subcommand { none, run, drift, oracle, claims, experiment, kalpha };

// Fully resolved invocation. Flags override config-file values; unknown keys
// are rejected in both.
struct CliConfig {
  Subcommand sub = Subcommand::none;
  int verbosity = 0;
  std::string output;
  OutputFormat format = OutputFormat::csv;
  std::string emit_config_path;

  ProcessParams params;
  double alpha = 0.1;

  // run
  long long rounds = 1000;
  std::vector<long long> snapshot_times;
  std::uint64_t trial = 0;

  // drift / oracle triangle
  std::vector<long long> loads;
  long long samples = 100000;
  PlacementModel model = PlacementModel::greedy_process;

  // oracle
  std::string oracle_mode = "stationary";
  long long load_cap = 40;
  double tolerance = 1e-12;

  // claims
  long long claim_samples = 10000;

  // experiment
  ExperimentSpec spec;
};

struct ParseOutcome {
  int exit_code = 0;
  bool should_run = false;  // false for --help or errors
  CliConfig config;
};

// Exit codes: 0 success/pass, 1 bound violated, 2 usage error.
inline constexpr int kExitPass = 0;
inline constexpr int kExitViolated = 1;
inline constexpr int kExitUsage = 2;

ParseOutcome parse_cli(const std::vector<std::string>& args);
int dispatch(const CliConfig& config);
int run_cli(const std::vector<std::string>& args);

// Relative output paths are placed under $BINSIM_OUT_DIR when it is set.
std::string resolve_output_path(const std::string& path);

}  // namespace binsim
