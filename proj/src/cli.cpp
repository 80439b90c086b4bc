#include "binsim/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "binsim/calibration.hpp"

namespace binsim {

namespace {

struct FlagState {
  std::string format = "csv";
  std::string scenario = "maxload2";
  std::string horizon = "default";
  std::string model = "process";
};

void build_app(CLI::App& app, CliConfig& config, FlagState& state) {
  app.require_subcommand(1);
  app.set_config("--config", "", "Key=value config file; command-line flags override it");
  app.allow_config_extras(false);
  app.add_flag("-v,--verbose", config.verbosity, "Increase verbosity");
  app.add_option("--emit-config", config.emit_config_path,
                 "Write the resolved configuration to this path and continue");

  const auto add_common = [&](CLI::App* sub) {
    sub->configurable(true);
    sub->fallthrough();
    sub->allow_config_extras(false);
    sub->add_option("--seed", config.params.seed, "Root RNG seed");
    sub->add_option("--alpha", config.alpha, "Potential exponent scale")
        ->check(CLI::PositiveNumber);
    sub->add_option("--output", config.output, "Output file path");
    sub->add_option("--format", state.format, "Output format (csv or json-lines)")
        ->check(CLI::IsMember({"csv", "jsonl", "json-lines"}));
  };
  const auto add_process = [&](CLI::App* sub, bool with_n) {
    if (with_n) sub->add_option("--n", config.params.n, "Number of bins")->check(CLI::PositiveNumber);
    sub->add_option("--lambda", config.params.lambda, "Arrival rate")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--d", config.params.d, "Choices per ball")->check(CLI::Range(1, kMaxChoices));
  };

  CLI::App* run = app.add_subcommand("run", "Simulate the process and emit snapshot rows");
  add_common(run);
  add_process(run, true);
  run->add_option("--rounds", config.rounds, "Rounds to simulate")->check(CLI::NonNegativeNumber);
  run->add_option("--snapshots", config.snapshot_times, "Snapshot rounds (default: final round)")
      ->delimiter(',');
  run->add_option("--trial", config.trial, "Trial index (stream id)");

  CLI::App* drift = app.add_subcommand("drift", "Monte Carlo one-step drift from a configuration");
  add_common(drift);
  add_process(drift, false);
  drift->add_option("--loads", config.loads, "Initial load vector")->delimiter(',')->required();
  drift->add_option("--samples", config.samples, "Monte Carlo samples")->check(CLI::PositiveNumber);
  drift->add_option("--model", state.model, "Placement model: process or rank")
      ->check(CLI::IsMember({"process", "rank"}));

  CLI::App* oracle = app.add_subcommand("oracle", "Exact small-instance oracles");
  add_common(oracle);
  add_process(oracle, true);
  oracle->add_option("--mode", config.oracle_mode, "triangle or stationary")
      ->check(CLI::IsMember({"triangle", "stationary"}));
  oracle->add_option("--loads", config.loads, "Configuration for the triangle mode")
      ->delimiter(',');
  oracle->add_option("--samples", config.samples, "Monte Carlo samples (triangle mode)")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--cap", config.load_cap, "Load cap (stationary mode)")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--tolerance", config.tolerance, "Power-iteration residual tolerance")
      ->check(CLI::PositiveNumber);

  CLI::App* claims = app.add_subcommand("claims", "Run the delta/p_i/eta_i claim checkers");
  add_common(claims);
  add_process(claims, true);
  claims->add_option("--samples", config.claim_samples, "Sampled configurations per checker")
      ->check(CLI::PositiveNumber);

  CLI::App* experiment = app.add_subcommand("experiment", "Scenario runner");
  add_common(experiment);
  experiment->add_option("--scenario", state.scenario,
                         "maxload1, maxload2, smoothness, lowerbound, selfstab, driftval")
      ->check(CLI::IsMember({"maxload1", "maxload2", "smoothness", "lowerbound", "selfstab",
                             "driftval"}));
  experiment->add_option("--n-grid", config.spec.n_grid, "Grid of n values")->delimiter(',');
  experiment->add_option("--lambda-grid", config.spec.lambda_grid, "Grid of lambda values")
      ->delimiter(',');
  experiment->add_option("--trials", config.spec.trials, "Trials per grid cell")
      ->check(CLI::PositiveNumber);
  experiment->add_option("--horizon", state.horizon, "default, fixed, warmup, or theorem")
      ->check(CLI::IsMember({"default", "fixed", "warmup", "theorem"}));
  experiment->add_option("--rounds", config.spec.fixed_rounds, "Rounds for --horizon fixed")
      ->check(CLI::NonNegativeNumber);
  experiment->add_option("--warmup-factor", config.spec.warmup_factor,
                         "Multiplier for the warm-up horizon")
      ->check(CLI::PositiveNumber);
  experiment->add_option("--snapshots", config.spec.snapshot_times, "Explicit snapshot rounds")
      ->delimiter(',');
  experiment->add_option("--d", config.spec.d_override, "Override the scenario's d")
      ->check(CLI::Range(0, kMaxChoices));
  experiment->add_option("--threads", config.spec.threads, "Worker threads over trials")
      ->check(CLI::PositiveNumber);
  experiment->add_option("--drift-samples", config.spec.drift_samples,
                         "Samples per configuration (driftval)")
      ->check(CLI::PositiveNumber);

  CLI::App* kalpha = app.add_subcommand("kalpha", "Static one-choice max-load threshold");
  add_common(kalpha);
  kalpha->add_option("--m", config.samples, "Number of balls")->check(CLI::PositiveNumber);
  kalpha->add_option("--bins", config.params.n, "Number of bins")->check(CLI::PositiveNumber);
  kalpha->add_option("--throw-trials", config.claim_samples,
                     "If > 0, simulate this many one-shot throws");
}

Subcommand active_subcommand(const CLI::App& app) {
  const auto subs = app.get_subcommands();
  if (subs.empty()) return Subcommand::none;
  const std::string name = subs.front()->get_name();
  if (name == "run") return Subcommand::run;
  if (name == "drift") return Subcommand::drift;
  if (name == "oracle") return Subcommand::oracle;
  if (name == "claims") return Subcommand::claims;
  if (name == "experiment") return Subcommand::experiment;
  if (name == "kalpha") return Subcommand::kalpha;
  return Subcommand::none;
}

double scenario_ratio_unit(int d, int n, double lambda) {
  const double gap = 1.0 - lambda;
  if (gap <= 0.0) return 0.0;
  const double unit = std::log(n / gap);
  return d == 1 ? unit / gap : unit;
}

int cmd_run(const CliConfig& config) {
  config.params.validate();
  std::vector<long long> snapshots = config.snapshot_times;
  if (snapshots.empty()) snapshots = {config.rounds};
  std::sort(snapshots.begin(), snapshots.end());
  snapshots.erase(std::unique(snapshots.begin(), snapshots.end()), snapshots.end());
  if (!snapshots.empty() && snapshots.back() > config.rounds)
    throw CLI::ValidationError("--snapshots", "snapshot beyond --rounds");

  const PotentialParams pparams{config.alpha, config.params.lambda};
  std::vector<ResultRow> rows;
  size_t next_snap = 0;
  const auto record = [&](const Configuration& c) {
    const PotentialReport report = compute_potentials(c, pparams);
    ResultRow row;
    row.scenario = "run";
    row.n = config.params.n;
    row.lambda = config.params.lambda;
    row.d = config.params.d;
    row.alpha = config.alpha;
    row.seed = config.params.seed;
    row.trial = static_cast<int>(config.trial);
    row.snapshot_t = c.round;
    row.max_load = report.max_load;
    row.min_load = report.min_load;
    row.spread = report.spread;
    row.psi = report.psi;
    row.phi = report.phi;
    row.gamma = report.gamma;
    const double unit = scenario_ratio_unit(config.params.d, config.params.n, config.params.lambda);
    row.ratio = unit > 0.0 ? report.max_load / unit : 0.0;
    row.pass = true;
    rows.push_back(row);
  };

  Rng rng = trial_rng(config.params, config.trial);
  Configuration live = Configuration::empty(config.params.n);
  while (next_snap < snapshots.size() && snapshots[next_snap] == 0) {
    record(live);
    ++next_snap;
  }
  RoundOutcome out;
  for (long long t = 1; t <= config.rounds; ++t) {
    step(live, config.params, rng, out);
    while (next_snap < snapshots.size() && snapshots[next_snap] == t) {
      record(live);
      ++next_snap;
    }
  }
  if (!config.output.empty()) {
    emit_results(rows, resolve_output_path(config.output), config.format);
  } else {
    std::ostringstream os;
    write_rows_csv(os, rows);
    std::cout << os.str();
  }
  return kExitPass;
}

int cmd_drift(const CliConfig& config) {
  Configuration start{config.loads, 0};
  ProcessParams params = config.params;
  params.n = start.n();
  params.validate();
  const DriftSet drift = monte_carlo_drift(start, params, config.alpha, config.samples,
                                           config.model);
  static const char* kTargetNames[] = {"delta_phi_plus", "delta_phi_minus", "delta_phi",
                                       "delta_psi", "delta_gamma"};
  std::ostringstream os;
  for (int t = 0; t < kDriftTargetCount; ++t) {
    const DriftEstimate& est = drift.estimates[static_cast<size_t>(t)];
    os << "{\"target\":\"" << kTargetNames[t] << "\",\"mean\":" << format_double(est.mean)
       << ",\"stderr\":" << format_double(est.stderr_of_mean) << ",\"samples\":" << est.samples
       << "}\n";
  }
  if (!config.output.empty()) {
    std::ofstream file(resolve_output_path(config.output), std::ios::binary);
    if (!file) throw std::runtime_error("cannot open " + config.output);
    file << os.str();
  } else {
    std::cout << os.str();
  }
  return kExitPass;
}

int cmd_oracle(const CliConfig& config) {
  if (config.oracle_mode == "triangle") {
    if (config.loads.empty())
      throw CLI::ValidationError("--loads", "triangle mode needs a configuration");
    Configuration start{config.loads, 0};
    ProcessParams params = config.params;
    params.n = start.n();
    params.validate();
    const DeltaPair closed = expected_delta_closed_form_total(start, config.alpha, params.lambda);
    const DeltaPair enumerated = expected_delta_enumeration(start, config.alpha, params.lambda);
    const DriftSet mc = monte_carlo_drift(start, params, config.alpha, config.samples,
                                          PlacementModel::rank_law);
    std::cout << "closed_form_plus=" << format_double(closed.plus)
              << " enumeration_plus=" << format_double(enumerated.plus)
              << " monte_carlo_plus=" << format_double(mc.of(DriftTarget::delta_phi_plus).mean)
              << "\n"
              << "closed_form_minus=" << format_double(closed.minus)
              << " enumeration_minus=" << format_double(enumerated.minus)
              << " monte_carlo_minus=" << format_double(mc.of(DriftTarget::delta_phi_minus).mean)
              << "\n";
    return kExitPass;
  }
  config.params.validate();
  const StationarySummary summary =
      stationary_oracle(config.params, config.load_cap, config.tolerance);
  std::cout << "states=" << summary.state_count << " iterations=" << summary.iterations
            << " residual=" << format_double(summary.residual)
            << " cap_mass=" << format_double(summary.cap_mass)
            << " expected_max_load=" << format_double(summary.expected_max_load) << "\n";
  if (config.verbosity > 0 && summary.n == 1) {
    for (long long load = 0; load <= std::min<long long>(summary.load_cap, 10); ++load) {
      std::cout << "pi(" << load << ")=" << format_double(summary.distribution[static_cast<size_t>(load)])
                << "\n";
    }
  }
  return kExitPass;
}

int cmd_claims(const CliConfig& config) {
  config.params.validate();
  const int n = config.params.n;
  bool all_pass = true;

  double worst_margin = 0.0;
  for (double lambda : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
    const Claim24Report report = claim24_check(config.alpha, lambda, n);
    all_pass = all_pass && report.pass;
    worst_margin = std::max(worst_margin, report.max_abs_delta - report.bound);
  }
  std::cout << (all_pass ? "[PASS]" : "[FAIL]") << " claim-delta-bound n=" << n
            << " alpha=" << format_double(config.alpha) << "\n";

  // Reachable configurations for the p_i and eta_i claims come from live
  // two-choice runs across a lambda sweep.
  ProcessParams sample_params{n, 0.5, 2, config.params.seed};
  double min_epsilon = 1e9;
  bool claim26_ok = true;
  long long emitted = 0;
  const double lambdas[] = {0.3, 0.5, 0.9, 0.99};
  const long long per_lambda = (config.claim_samples + 3) / 4;
  for (double lambda : lambdas) {
    sample_params.lambda = lambda;
    Rng rng(derive_stream(config.params.seed, {0x636c61696d73ULL, double_bits(lambda)}));
    Configuration live = Configuration::empty(n);
    RoundOutcome out;
    for (int warm = 0; warm < 64; ++warm) step(live, sample_params, rng, out);
    for (long long s = 0; s < per_lambda && emitted < config.claim_samples; ++s, ++emitted) {
      for (int gap = 0; gap < 4; ++gap) step(live, sample_params, rng, out);
      min_epsilon = std::min(min_epsilon, claim25_epsilon(live, config.alpha).epsilon);
      const Claim26Report c26 = claim26_check(live, config.alpha);
      claim26_ok = claim26_ok && c26.upper_ok && c26.lower_ok;
    }
  }
  const bool epsilon_ok = min_epsilon > 0.0;
  std::cout << (epsilon_ok ? "[PASS]" : "[FAIL]") << " claim-epsilon min="
            << format_double(min_epsilon) << " over " << emitted << " reachable configs\n";
  std::cout << (claim26_ok ? "[PASS]" : "[FAIL]") << " claim-eta-weighted over " << emitted
            << " reachable configs\n";

  all_pass = all_pass && epsilon_ok && claim26_ok;
  return all_pass ? kExitPass : kExitViolated;
}

int cmd_experiment(const CliConfig& config) {
  const ExperimentResult result = run_scenario(config.spec);
  const std::string path = config.output.empty()
                               ? std::string("results.") +
                                     (config.format == OutputFormat::csv ? "csv" : "jsonl")
                               : config.output;
  emit_results(result.rows, resolve_output_path(path), config.format);
  if (config.verbosity > 0) {
    for (const CellStats& cell : result.cells) {
      std::cout << "cell n=" << cell.n << " lambda=" << format_double(cell.lambda)
                << " t=" << cell.snapshot_t << " max(q95)=" << format_double(cell.max_load.q95)
                << " ratio=" << format_double(cell.ratio)
                << " pass_fraction=" << format_double(cell.pass_fraction)
                << (cell.pass ? " PASS" : " FAIL") << "\n";
    }
    for (const auto& [key, value] : result.metrics) {
      std::cout << "metric " << key << "=" << format_double(value) << "\n";
    }
  }
  std::cout << "scenario " << scenario_name(result.scenario)
            << (result.pass ? " PASS" : " FAIL") << "\n";
  return result.pass ? kExitPass : kExitViolated;
}

int cmd_kalpha(const CliConfig& config) {
  const long long m = config.samples;
  const long long bins = config.params.n;
  const KAlphaResult result = k_alpha(m, bins, config.alpha);
  std::cout << "k_alpha=" << format_double(result.value) << " regime="
            << static_cast<int>(result.regime) << " c=" << format_double(result.c)
            << " near_boundary=" << (result.near_boundary ? 1 : 0);
  if (!std::isnan(result.d_c)) std::cout << " d_c=" << format_double(result.d_c);
  std::cout << "\n";
  if (config.claim_samples > 0) {
    Rng rng(derive_stream(config.params.seed, {0x6b616c706861ULL}));
    std::vector<double> maxes;
    for (long long trial = 0; trial < config.claim_samples; ++trial) {
      maxes.push_back(static_cast<double>(one_shot_throw(m, bins, rng)));
    }
    const QuantileStats stats = quantile_stats(std::move(maxes));
    const double k_low = k_alpha(m, bins, 0.8).value;
    const double k_high = k_alpha(m, bins, 1.2).value;
    std::cout << "throws mean=" << format_double(stats.mean) << " q50=" << format_double(stats.q50)
              << " q95=" << format_double(stats.q95) << " k_0.8=" << format_double(k_low)
              << " k_1.2=" << format_double(k_high) << "\n";
  }
  return kExitPass;
}

}  // namespace

std::string resolve_output_path(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  const char* dir = std::getenv("BINSIM_OUT_DIR");
  if (dir == nullptr || dir[0] == '\0') return path;
  std::string full = dir;
  if (full.back() != '/') full += '/';
  return full + path;
}

ParseOutcome parse_cli(const std::vector<std::string>& args) {
  ParseOutcome outcome;
  FlagState state;
  CLI::App app{"balls-into-bins process simulator and analysis harness", "binsim"};
  build_app(app, outcome.config, state);

  std::vector<const char*> argv;
  argv.push_back("binsim");
  for (const std::string& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    outcome.exit_code = app.exit(e);
    if (outcome.exit_code != 0) outcome.exit_code = kExitUsage;
    return outcome;
  }

  outcome.config.sub = active_subcommand(app);
  if (!format_from_name(state.format, outcome.config.format)) outcome.config.format = OutputFormat::csv;
  if (!scenario_from_name(state.scenario, outcome.config.spec.scenario))
    outcome.config.spec.scenario = Scenario::maxload2;
  outcome.config.model =
      state.model == "rank" ? PlacementModel::rank_law : PlacementModel::greedy_process;
  if (state.horizon == "fixed") {
    outcome.config.spec.horizon = HorizonRule::fixed_rounds;
  } else if (state.horizon == "warmup") {
    outcome.config.spec.horizon = HorizonRule::warmup_multiple;
  } else if (state.horizon == "theorem") {
    outcome.config.spec.horizon = HorizonRule::lowerbound_formula;
  }
  outcome.config.spec.alpha = outcome.config.alpha;
  outcome.config.spec.seed = outcome.config.params.seed;

  if (!outcome.config.emit_config_path.empty()) {
    std::ofstream file(outcome.config.emit_config_path, std::ios::binary);
    if (file) file << app.config_to_str(false, false);
  }

  outcome.should_run = true;
  return outcome;
}

int dispatch(const CliConfig& config) {
  try {
    switch (config.sub) {
      case Subcommand::run:
        return cmd_run(config);
      case Subcommand::drift:
        return cmd_drift(config);
      case Subcommand::oracle:
        return cmd_oracle(config);
      case Subcommand::claims:
        return cmd_claims(config);
      case Subcommand::experiment:
        return cmd_experiment(config);
      case Subcommand::kalpha:
        return cmd_kalpha(config);
      case Subcommand::none:
        break;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitViolated;
  }
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args) {
  const ParseOutcome outcome = parse_cli(args);
  if (!outcome.should_run) return outcome.exit_code;
  return dispatch(outcome.config);
}

}  // namespace binsim
