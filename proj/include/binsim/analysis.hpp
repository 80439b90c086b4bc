#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "binsim/potentials.hpp"
#include "binsim/process.hpp"

namespace binsim {

enum class DriftTarget : int {
  delta_phi_plus = 0,
  delta_phi_minus = 1,
  delta_phi = 2,
  delta_psi = 3,
  delta_gamma = 4,
};

inline constexpr int kDriftTargetCount = 5;

// Monte Carlo estimate of one one-step expected potential change.
struct DriftEstimate {
  double mean = 0.0;
  double stderr_of_mean = 0.0;  // sample stddev / sqrt(samples)
  long long samples = 0;
  DriftTarget target = DriftTarget::delta_phi;
};

// Which placement law drives a simulated round.
//   greedy_process: the actual Greedy[d] allocation against the snapshot.
//   rank_law: each ball independently lands in the i-th fullest bin of the
//     starting configuration with probability (2i-1)/n^2. This is the law
//     the closed form and the enumeration oracle are exact in; the two
//     models coincide whenever the starting loads are pairwise distinct
//     (d = 2), and differ only in how tie classes split their receipts.
enum class PlacementModel { greedy_process, rank_law };

struct DriftSet {
  std::array<DriftEstimate, kDriftTargetCount> estimates;
  bool gamma_defined = true;

  const DriftEstimate& of(DriftTarget t) const { return estimates[static_cast<size_t>(t)]; }
};

DriftSet monte_carlo_drift(const Configuration& config, const ProcessParams& params, double alpha,
                           long long samples, PlacementModel model = PlacementModel::greedy_process,
                           std::uint64_t salt = 0);

enum class Side { upper, lower };

// Exact one-step expectation of the rank-i potential change, pre-Taylor:
//   upper: F_{i,+} * (e^{-alpha eta_i} (1 - L + L e^{-alpha/n} (1 + alpha_hat p_i))^n - 1)
//   lower: F_{i,-} * (e^{+alpha eta_i} (1 - L + L e^{+alpha/n} (1 - alpha_check p_i))^n - 1)
// exact in the rank_law model above. Rank is 1-based against the given
// configuration.
double expected_delta_closed_form(const Configuration& config, int rank, double alpha, double lambda,
                                  Side side);

struct DeltaPair {
  double plus = 0.0;
  double minus = 0.0;
};

// Closed form summed over all ranks.
DeltaPair expected_delta_closed_form_total(const Configuration& config, double alpha, double lambda);

// Independent route to the same expectations: enumerate the batch size
// K ~ Binomial(n, lambda) and every rank-placement pattern of the K balls.
// Tractable for n <= 3 only.
DeltaPair expected_delta_enumeration(const Configuration& config, double alpha, double lambda);

// The two quantities behind the one-choice maximum-load argument: the
// exponential moment E[e^{x (B+1)}] with B ~ Binomial(n, lambda/n), computed
// in closed form as e^x (1 - lambda/n + (lambda/n) e^x)^n, and the per-round
// load bias lambda - 1 of a non-empty bin. eta_star is the resulting tail
// exponent min(x, (1-lambda) x^2 / (2 moment), 1/(2(1-lambda))).
struct HajekReport {
  double moment = 0.0;
  double negative_bias = 0.0;
  double eta_star = 0.0;
  bool degenerate = false;  // lambda = 1: the bias vanishes
};

HajekReport hajek_conditions_one_choice(const ProcessParams& params, double eta_exponent = 1.0);

// Checks the negative-bias condition for the combined potential: above the
// threshold 2 n^4 / ((1-lambda)^2 lambda) one round must push gamma down by
// at least 1 in expectation. Monte Carlo with a 4-sigma margin.
struct GammaDriftReport {
  double threshold = 0.0;
  double gamma_value = 0.0;
  bool above_threshold = false;
  bool applicable = false;  // lambda in [1/4, 1)
  DriftEstimate drift;
  bool satisfied = false;
};

GammaDriftReport gamma_drift_check(const Configuration& config, const ProcessParams& params,
                                   double alpha, long long samples);

// Largest eps >= 0 with
//   sum_{i <= 3n/4} p_i F_{i,+} <= (1 - 2 eps) phi_plus / n   and
//   sum_i p_i F_{i,-} >= (1 + 2 eps) (phi_minus - sum_{i <= n/4} F_{i,-}) / n.
// Index bounds use floors when n is not divisible by 4 (flagged).
struct Claim25Report {
  double epsilon = 0.0;
  double upper_epsilon = 0.0;
  double lower_epsilon = 0.0;
  bool floored = false;
};

Claim25Report claim25_epsilon(const Configuration& config, double alpha);

// max_i(|delta_hat_i|, |delta_check_i|) <= (5/4) lambda whenever
// alpha <= ln(10/9); pass is the implication.
struct Claim24Report {
  double max_abs_delta = 0.0;
  double bound = 0.0;
  bool pass = false;
};

Claim24Report claim24_check(double alpha, double lambda, int n);

// The eta_i-weighted potential sums:
//   sum_i alpha eta_i (alpha eta_i - 1) F_{i,+} <= alpha^2 eta nu min(n, phi_plus)
//   sum_i alpha eta_i (alpha eta_i + 1) F_{i,-} <= alpha^2 eta nu phi_minus
struct Claim26Report {
  double lhs_upper = 0.0;
  double rhs_upper = 0.0;
  double lhs_lower = 0.0;
  double rhs_lower = 0.0;
  bool upper_ok = false;
  bool lower_ok = false;
};

Claim26Report claim26_check(const Configuration& config, double alpha);

// Static one-choice threshold formula (m balls, n bins), four regimes in
// m/n. Natural logarithms throughout.
enum class KAlphaRegime : int {
  below_log = 1,   // m well below n ln n
  log_factor = 2,  // m = c n ln n
  above_log = 3,   // m well above n ln n but at most n (ln n)^3
  heavy = 4,       // m beyond n (ln n)^3
};

struct KAlphaResult {
  double value = 0.0;
  KAlphaRegime regime = KAlphaRegime::below_log;
  bool near_boundary = false;
  double c = 0.0;    // m / (n ln n)
  double d_c = 0.0;  // root used by the log_factor regime, NaN otherwise
};

// Largest solution of 1 + x (ln c - ln x + 1) - c = 0.
double solve_d_c(double c);

// Evaluate one regime's formula directly.
double k_alpha_formula(long long m, long long n, double alpha, KAlphaRegime regime);

// Detect the regime, flag boundary cases, evaluate.
KAlphaResult k_alpha(long long m, long long n, double alpha);

// Throw m balls uniformly into n bins once; returns the maximum bin count.
long long one_shot_throw(long long m, long long n, Rng& rng);

// Numerical stability probe: exact one-round transition matrix on the
// load-capped state space, power-iterated to the stationary distribution.
// Transitions that would exceed the cap are clamped to it, which keeps the
// matrix stochastic; cap_mass reports the stationary weight sitting on the
// clamped boundary so the truncation error is visible.
struct StationarySummary {
  int n = 1;
  double lambda = 0.0;
  int d = 1;
  long long load_cap = 0;
  long long state_count = 0;
  std::vector<double> distribution;  // mixed-radix state index, base load_cap+1
  double cap_mass = 0.0;
  double expected_max_load = 0.0;
  long long iterations = 0;
  double residual = 0.0;

  long long state_index(const std::vector<long long>& loads) const;
  double mass_of(const std::vector<long long>& loads) const;
};

StationarySummary stationary_oracle(const ProcessParams& params, long long load_cap,
                                    double tolerance, long long max_iterations = 500000);

}  // namespace binsim
