#include "binsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <thread>

#include "binsim/calibration.hpp"
#include "binsim/potentials.hpp"

namespace binsim {

namespace {

constexpr std::uint64_t kScenarioSalt = 0x7363656e6172696fULL;

const char* kScenarioNames[] = {"maxload1", "maxload2", "smoothness",
                                "lowerbound", "selfstab", "driftval"};

int scenario_d(const ExperimentSpec& spec) {
  if (spec.d_override > 0) return spec.d_override;
  switch (spec.scenario) {
    case Scenario::maxload1:
    case Scenario::lowerbound:
      return 1;
    default:
      return 2;
  }
}

double clamped_gap(double lambda) { return std::max(1.0 - lambda, 0.01); }

std::vector<long long> snapshot_plan(const ExperimentSpec& spec, int n, double lambda) {
  std::vector<long long> snaps = spec.snapshot_times;
  if (snaps.empty()) {
    if (spec.scenario == Scenario::selfstab) {
      const long long t = std::max<long long>(10000, horizon_rounds(spec, n, lambda));
      snaps = {t, 10 * t};
    } else {
      snaps = {horizon_rounds(spec, n, lambda)};
    }
  }
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  if (snaps.front() < 0) throw std::invalid_argument("snapshot times must be >= 0");
  return snaps;
}

struct SnapRecord {
  long long max_load = 0;
  long long min_load = 0;
  long long psi = 0;
  double phi = 0.0;
  double gamma = 0.0;
};

SnapRecord observe(const Configuration& config, const PotentialParams& pparams) {
  const PotentialReport report = compute_potentials(config, pparams);
  SnapRecord rec;
  rec.max_load = report.max_load;
  rec.min_load = report.min_load;
  rec.psi = report.psi;
  rec.phi = report.phi;
  rec.gamma = report.gamma;
  return rec;
}

void simulate_trial(const ProcessParams& params, const std::vector<long long>& snapshots,
                    const PotentialParams& pparams, Rng rng, SnapRecord* out) {
  Configuration config = Configuration::empty(params.n);
  RoundOutcome round_outcome;
  size_t snap = 0;
  while (snap < snapshots.size() && snapshots[snap] == 0) out[snap++] = observe(config, pparams);
  const long long last = snapshots.back();
  for (long long t = 1; t <= last; ++t) {
    step(config, params, rng, round_outcome);
    while (snap < snapshots.size() && snapshots[snap] == t) out[snap++] = observe(config, pparams);
  }
}

void for_each_trial(int trials, int threads, const std::function<void(int)>& body) {
  if (threads <= 1) {
    for (int t = 0; t < trials; ++t) body(t);
    return;
  }
  std::vector<std::thread> pool;
  const int workers = std::min(threads, trials);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int t = w; t < trials; t += workers) body(t);
    });
  }
  for (auto& th : pool) th.join();
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double sup = 0.0;
  size_t i = 0;
  size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    const double fa = static_cast<double>(i) / static_cast<double>(a.size());
    const double fb = static_cast<double>(j) / static_cast<double>(b.size());
    sup = std::max(sup, std::fabs(fa - fb));
  }
  return sup;
}

std::string cell_key(const char* name, int n, double lambda) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s/n=%d,l=%.6g", name, n, lambda);
  return buf;
}

// Drift-validation configurations for one grid cell: checkpoints from a
// long run plus spikes, plateaus, and uniform shelves.
std::vector<Configuration> driftval_configs(const ExperimentSpec& spec, int n, double lambda) {
  std::vector<Configuration> configs;
  ProcessParams params{n, lambda, 2, derive_stream(spec.seed, {kScenarioSalt, 0xC0FFEEULL,
                                                               static_cast<std::uint64_t>(n),
                                                               double_bits(lambda)})};
  Rng rng(params.seed);
  Configuration config = Configuration::empty(n);
  RoundOutcome out;
  const long long warm = horizon_rounds(spec, n, lambda);
  for (long long t = 0; t < warm; ++t) step(config, params, rng, out);
  const long long gap = std::max<long long>(1, n / 4);
  for (int c = 0; c < 16; ++c) {
    for (long long t = 0; t < gap; ++t) step(config, params, rng, out);
    configs.push_back(config);
  }
  for (long long spike : {4LL, 16LL, 64LL}) {
    Configuration adversarial = Configuration::empty(n);
    adversarial.loads[0] = spike * n;
    configs.push_back(adversarial);
  }
  for (long long shelf : {4LL, 16LL}) {
    Configuration adversarial = Configuration::empty(n);
    for (int i = 0; i < n / 2; ++i) adversarial.loads[static_cast<size_t>(i)] = shelf;
    configs.push_back(adversarial);
  }
  configs.push_back(Configuration::empty(n));
  {
    Configuration uniform = Configuration::empty(n);
    std::fill(uniform.loads.begin(), uniform.loads.end(), 8);
    configs.push_back(uniform);
  }
  return configs;
}

ExperimentResult run_driftval(const ExperimentSpec& spec) {
  ExperimentResult result;
  result.scenario = spec.scenario;
  result.d = 2;
  bool all_pass = true;
  for (int n : spec.n_grid) {
    for (double lambda : spec.lambda_grid) {
      const auto configs = driftval_configs(spec, n, lambda);
      ProcessParams params{n, lambda, 2,
                           derive_stream(spec.seed, {kScenarioSalt, 0xD21F7ULL,
                                                     static_cast<std::uint64_t>(n),
                                                     double_bits(lambda)})};
      struct Point {
        double phi;
        double mean;
        double sem;
      };
      std::vector<Point> points(configs.size());
      std::vector<SnapRecord> recs(configs.size());
      const PotentialParams pparams{spec.alpha, lambda};
      for_each_trial(static_cast<int>(configs.size()), spec.threads, [&](int idx) {
        const auto& config = configs[static_cast<size_t>(idx)];
        const DriftSet drift = monte_carlo_drift(config, params, spec.alpha, spec.drift_samples,
                                                 PlacementModel::greedy_process,
                                                 static_cast<std::uint64_t>(idx));
        const DriftEstimate& est = drift.of(DriftTarget::delta_phi);
        recs[static_cast<size_t>(idx)] = observe(config, pparams);
        points[static_cast<size_t>(idx)] =
            Point{recs[static_cast<size_t>(idx)].phi, est.mean, est.stderr_of_mean};
      });

      // Fit E[dPhi] <= -rho phi + c n: the additive term from low-potential
      // configurations, then the largest multiplicative rate the
      // high-potential ones allow.
      const double floor_phi = calibration::kDriftHighPotentialK * n;
      double c_hat = 0.0;
      for (const Point& p : points) {
        if (p.phi <= floor_phi) c_hat = std::max(c_hat, (p.mean + 4.0 * p.sem) / n);
      }
      double rho_hat = 1.0;
      bool saw_high = false;
      bool high_negative = true;
      for (const Point& p : points) {
        if (p.phi <= floor_phi) continue;
        saw_high = true;
        rho_hat = std::min(rho_hat, (c_hat * n - p.mean) / p.phi);
        if (!(p.mean + 4.0 * p.sem < 0.0)) high_negative = false;
      }
      if (!saw_high) rho_hat = 0.0;
      rho_hat = std::clamp(rho_hat, 0.0, 1.0);
      const bool cell_pass = saw_high && rho_hat > 0.0 && high_negative;
      all_pass = all_pass && cell_pass;

      result.metrics[cell_key("rho_hat", n, lambda)] = rho_hat;
      result.metrics[cell_key("c_hat", n, lambda)] = c_hat;

      for (size_t idx = 0; idx < configs.size(); ++idx) {
        const SnapRecord& rec = recs[idx];
        ResultRow row;
        row.scenario = scenario_name(spec.scenario);
        row.n = n;
        row.lambda = lambda;
        row.d = 2;
        row.alpha = spec.alpha;
        row.seed = spec.seed;
        row.trial = static_cast<int>(idx);
        row.snapshot_t = 0;
        row.max_load = rec.max_load;
        row.min_load = rec.min_load;
        row.spread = rec.max_load - rec.min_load;
        row.psi = rec.psi;
        row.phi = rec.phi;
        row.gamma = rec.gamma;
        row.ratio = points[idx].mean / std::max(rec.phi, 1.0);
        row.pass = points[idx].phi <= floor_phi || points[idx].mean + 4.0 * points[idx].sem < 0.0;
        result.rows.push_back(row);
      }

      CellStats cell;
      cell.n = n;
      cell.lambda = lambda;
      cell.snapshot_t = 0;
      std::vector<double> phis;
      for (const Point& p : points) phis.push_back(p.phi);
      cell.phi = quantile_stats(std::move(phis));
      cell.ratio = rho_hat;
      cell.pass = cell_pass;
      cell.pass_fraction = cell_pass ? 1.0 : 0.0;
      result.cells.push_back(cell);
    }
  }
  result.pass = all_pass;
  return result;
}

}  // namespace

const char* scenario_name(Scenario s) { return kScenarioNames[static_cast<int>(s)]; }

bool scenario_from_name(const std::string& name, Scenario& out) {
  for (int i = 0; i < 6; ++i) {
    if (name == kScenarioNames[i]) {
      out = static_cast<Scenario>(i);
      return true;
    }
  }
  return false;
}

void ExperimentSpec::validate() const {
  if (n_grid.empty() || lambda_grid.empty())
    throw std::invalid_argument("ExperimentSpec: grids must be non-empty");
  if (trials < 1) throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("ExperimentSpec: alpha must be > 0");
  if (!(warmup_factor > 0.0)) throw std::invalid_argument("ExperimentSpec: warmup_factor must be > 0");
  for (int n : n_grid) {
    if (n < 1) throw std::invalid_argument("ExperimentSpec: n must be >= 1");
    if (n < 2 && scenario == Scenario::smoothness)
      throw std::invalid_argument("ExperimentSpec: smoothness needs n >= 2");
  }
  for (double lambda : lambda_grid) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("ExperimentSpec: lambda must be in [0,1]");
    const bool needs_gap = scenario == Scenario::maxload1 || scenario == Scenario::maxload2 ||
                           scenario == Scenario::lowerbound;
    if (needs_gap && lambda >= 1.0)
      throw std::invalid_argument("ExperimentSpec: scenario needs lambda < 1");
    if (scenario == Scenario::lowerbound && lambda < 0.5)
      throw std::invalid_argument("ExperimentSpec: lowerbound needs lambda >= 0.5");
  }
  if (horizon == HorizonRule::fixed_rounds && fixed_rounds < 0)
    throw std::invalid_argument("ExperimentSpec: fixed_rounds must be >= 0");
}

long long horizon_rounds(const ExperimentSpec& spec, int n, double lambda) {
  switch (spec.horizon) {
    case HorizonRule::fixed_rounds:
      return spec.fixed_rounds;
    case HorizonRule::lowerbound_formula:
      break;
    case HorizonRule::warmup_multiple:
      return static_cast<long long>(
          std::ceil(spec.warmup_factor * std::log(std::max(n, 2)) / clamped_gap(lambda)));
    case HorizonRule::scenario_default:
      if (spec.scenario != Scenario::lowerbound) {
        return static_cast<long long>(
            std::ceil(spec.warmup_factor * std::log(std::max(n, 2)) / clamped_gap(lambda)));
      }
      break;
  }
  // Theorem horizon for the one-choice lower bound.
  return static_cast<long long>(
      std::ceil(9.0 * lambda * std::log(static_cast<double>(n)) /
                (64.0 * (1.0 - lambda) * (1.0 - lambda))));
}

QuantileStats quantile_stats(std::vector<double> values) {
  QuantileStats stats;
  if (values.empty()) return stats;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
  stats.sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  const auto pick = [&](double p) {
    const auto k = static_cast<size_t>(
        std::max(0.0, std::ceil(p * static_cast<double>(values.size())) - 1.0));
    return values[std::min(k, values.size() - 1)];
  };
  stats.q50 = pick(0.50);
  stats.q90 = pick(0.90);
  stats.q95 = pick(0.95);
  stats.q99 = pick(0.99);
  return stats;
}

ExperimentResult run_scenario(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.scenario == Scenario::driftval) return run_driftval(spec);

  ExperimentResult result;
  result.scenario = spec.scenario;
  result.d = scenario_d(spec);
  bool all_pass = true;

  for (int n : spec.n_grid) {
    for (double lambda : spec.lambda_grid) {
      const std::vector<long long> snapshots = snapshot_plan(spec, n, lambda);
      const PotentialParams pparams{spec.alpha, lambda};
      const ProcessParams params{n, lambda, result.d, spec.seed};

      std::vector<SnapRecord> records(static_cast<size_t>(spec.trials) * snapshots.size());
      for_each_trial(spec.trials, spec.threads, [&](int trial) {
        Rng rng(derive_stream(spec.seed, {kScenarioSalt,
                                          static_cast<std::uint64_t>(spec.scenario),
                                          static_cast<std::uint64_t>(n), double_bits(lambda),
                                          static_cast<std::uint64_t>(trial)}));
        simulate_trial(params, snapshots, pparams, rng,
                       records.data() + static_cast<size_t>(trial) * snapshots.size());
      });

      const double gap = 1.0 - lambda;
      const double log_n = std::log(static_cast<double>(n));
      const double one_choice_unit = gap > 0.0 ? std::log(n / gap) / gap : 0.0;
      const double two_choice_unit = gap > 0.0 ? std::log(n / gap) : log_n;
      const double lower_threshold =
          gap > 0.0 ? calibration::kLowerBoundC * lambda * log_n / gap : 0.0;
      const double psi_bound =
          gap > 0.0 ? 9.0 * static_cast<double>(n) / spec.alpha * std::log(n / gap) : 0.0;

      for (size_t snap = 0; snap < snapshots.size(); ++snap) {
        std::vector<double> maxes;
        std::vector<double> spreads;
        std::vector<double> psis;
        std::vector<double> phis;
        int pass_count = 0;
        for (int trial = 0; trial < spec.trials; ++trial) {
          const SnapRecord& rec = records[static_cast<size_t>(trial) * snapshots.size() + snap];
          ResultRow row;
          row.scenario = scenario_name(spec.scenario);
          row.n = n;
          row.lambda = lambda;
          row.d = result.d;
          row.alpha = spec.alpha;
          row.seed = spec.seed;
          row.trial = trial;
          row.snapshot_t = snapshots[snap];
          row.max_load = rec.max_load;
          row.min_load = rec.min_load;
          row.spread = rec.max_load - rec.min_load;
          row.psi = rec.psi;
          row.phi = rec.phi;
          row.gamma = rec.gamma;
          switch (spec.scenario) {
            case Scenario::maxload1:
              row.ratio = one_choice_unit > 0.0 ? rec.max_load / one_choice_unit : 0.0;
              row.pass = row.ratio <= calibration::kOneChoiceRatioBound;
              break;
            case Scenario::maxload2:
              row.ratio = two_choice_unit > 0.0 ? rec.max_load / two_choice_unit : 0.0;
              row.pass = row.ratio <= calibration::kTwoChoiceRatioBound;
              break;
            case Scenario::smoothness:
              row.ratio = static_cast<double>(row.spread) / log_n;
              row.pass = row.ratio <= calibration::kSmoothnessSpreadBound;
              break;
            case Scenario::lowerbound:
              row.ratio = lower_threshold > 0.0 ? rec.max_load / lower_threshold : 0.0;
              row.pass = static_cast<double>(rec.max_load) >= lower_threshold;
              break;
            default:
              row.ratio = two_choice_unit > 0.0 ? rec.max_load / two_choice_unit : 0.0;
              row.pass = true;
              break;
          }
          if (row.pass) ++pass_count;
          result.rows.push_back(row);
          maxes.push_back(static_cast<double>(rec.max_load));
          spreads.push_back(static_cast<double>(row.spread));
          psis.push_back(static_cast<double>(rec.psi));
          phis.push_back(rec.phi);
        }

        CellStats cell;
        cell.n = n;
        cell.lambda = lambda;
        cell.snapshot_t = snapshots[snap];
        cell.max_load = quantile_stats(maxes);
        cell.spread = quantile_stats(spreads);
        cell.psi = quantile_stats(psis);
        cell.phi = quantile_stats(phis);
        cell.pass_fraction = static_cast<double>(pass_count) / spec.trials;
        switch (spec.scenario) {
          case Scenario::maxload1:
            cell.ratio = one_choice_unit > 0.0 ? cell.max_load.q95 / one_choice_unit : 0.0;
            cell.pass = cell.pass_fraction >= calibration::kPassFraction;
            break;
          case Scenario::maxload2:
            cell.ratio = two_choice_unit > 0.0 ? cell.max_load.q95 / two_choice_unit : 0.0;
            cell.psi_ratio = psi_bound > 0.0 ? cell.psi.q95 / psi_bound : 0.0;
            cell.pass = cell.pass_fraction >= calibration::kPassFraction && cell.psi_ratio < 1.0;
            break;
          case Scenario::smoothness:
            cell.ratio = cell.spread.q95 / log_n;
            cell.pass = cell.pass_fraction >= calibration::kPassFraction;
            result.metrics[cell_key("epsilon_hat", n, lambda)] =
                static_cast<double>(n) / std::max(cell.phi.mean, 1e-300);
            break;
          case Scenario::lowerbound:
            cell.ratio = lower_threshold > 0.0 ? cell.max_load.q50 / lower_threshold : 0.0;
            cell.pass = true;  // judged across the n grid below
            result.metrics[cell_key("lower_fraction", n, lambda)] = cell.pass_fraction;
            break;
          default:
            cell.ratio = two_choice_unit > 0.0 ? cell.max_load.q95 / two_choice_unit : 0.0;
            cell.pass = true;
            break;
        }
        result.cells.push_back(cell);
        all_pass = all_pass && cell.pass;
      }
    }
  }

  // Scenario-level verdicts that compare cells.
  if (spec.scenario == Scenario::smoothness) {
    for (double lambda : spec.lambda_grid) {
      double first = -1.0;
      double worst = 0.0;
      for (const CellStats& cell : result.cells) {
        if (cell.lambda != lambda) continue;
        if (first < 0.0) first = std::max(cell.ratio, 1e-12);
        worst = std::max(worst, cell.ratio / first);
      }
      result.metrics[cell_key("trend", 0, lambda)] = worst;
      all_pass = all_pass && worst <= 1.2;
    }
  } else if (spec.scenario == Scenario::lowerbound) {
    for (double lambda : spec.lambda_grid) {
      double prev = -1.0;
      double last = 0.0;
      bool monotone = true;
      for (const CellStats& cell : result.cells) {
        if (cell.lambda != lambda) continue;
        if (prev >= 0.0 && cell.pass_fraction < prev) monotone = false;
        prev = cell.pass_fraction;
        last = cell.pass_fraction;
      }
      result.metrics[cell_key("lower_monotone", 0, lambda)] = monotone ? 1.0 : 0.0;
      all_pass = all_pass && monotone && last >= 0.9;
    }
  } else if (spec.scenario == Scenario::selfstab) {
    for (int n : spec.n_grid) {
      for (double lambda : spec.lambda_grid) {
        std::vector<const CellStats*> cells;
        std::vector<std::vector<double>> samples;
        for (const CellStats& cell : result.cells) {
          if (cell.n == n && cell.lambda == lambda) cells.push_back(&cell);
        }
        if (cells.size() < 2) continue;
        for (const CellStats* cell : cells) {
          std::vector<double> values;
          for (const ResultRow& row : result.rows) {
            if (row.n == n && row.lambda == lambda && row.snapshot_t == cell->snapshot_t)
              values.push_back(static_cast<double>(row.max_load));
          }
          samples.push_back(std::move(values));
        }
        const CellStats& early = *cells.front();
        const CellStats& late = *cells.back();
        const double trials = static_cast<double>(spec.trials);
        const double sem_early = early.max_load.sd / std::sqrt(trials);
        const double sem_late = late.max_load.sd / std::sqrt(trials);
        const double diff = std::fabs(early.max_load.mean - late.max_load.mean);
        const bool overlap = diff <= 1.96 * (sem_early + sem_late);
        const double ks = ks_distance(samples.front(), samples.back());
        const double cutoff = calibration::kKsCoefficient * std::sqrt(2.0 / trials);
        result.metrics[cell_key("mean_diff", n, lambda)] = diff;
        result.metrics[cell_key("ci_overlap", n, lambda)] = overlap ? 1.0 : 0.0;
        result.metrics[cell_key("ks", n, lambda)] = ks;
        result.metrics[cell_key("ks_cutoff", n, lambda)] = cutoff;
        all_pass = all_pass && overlap && ks <= cutoff;
      }
    }
  }

  result.pass = all_pass;
  return result;
}

}  // namespace binsim
