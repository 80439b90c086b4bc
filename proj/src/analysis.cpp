#include "binsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace binsim {

namespace {

constexpr std::uint64_t kDriftSalt = 0x64726966745f6d63ULL;

// Per-rank view of a configuration with everything the exact formulas need,
// in long double.
struct RankContext {
  int n = 0;
  long long psi = 0;
  long long non_empty = 0;
  std::vector<int> order;            // rank -> bin id
  std::vector<long double> eta;      // eta_i by rank
  std::vector<long double> f_plus;   // e^{alpha (x_i - avg)} by rank
  std::vector<long double> f_minus;  // e^{alpha (avg - x_i)} by rank
  std::vector<long double> p;        // (2i-1)/n^2 by rank
};

RankContext make_rank_context(const Configuration& config, double alpha) {
  RankContext ctx;
  ctx.n = config.n();
  if (ctx.n < 1) throw std::invalid_argument("rank context: empty configuration");
  ctx.order = rank_view(config);
  for (long long load : config.loads) {
    if (load < 0) throw std::invalid_argument("rank context: negative load");
    ctx.psi += load;
    if (load > 0) ++ctx.non_empty;
  }
  const long double n = ctx.n;
  const long double a = alpha;
  ctx.eta.resize(static_cast<size_t>(ctx.n));
  ctx.f_plus.resize(static_cast<size_t>(ctx.n));
  ctx.f_minus.resize(static_cast<size_t>(ctx.n));
  ctx.p.resize(static_cast<size_t>(ctx.n));
  for (int r = 0; r < ctx.n; ++r) {
    const long long load = config.loads[static_cast<size_t>(ctx.order[static_cast<size_t>(r)])];
    const long long indicator = load > 0 ? 1 : 0;
    ctx.eta[static_cast<size_t>(r)] =
        static_cast<long double>(indicator * ctx.n - ctx.non_empty) / n;
    const long double centered =
        static_cast<long double>(load * static_cast<long long>(ctx.n) - ctx.psi) / n;
    ctx.f_plus[static_cast<size_t>(r)] = expl(a * centered);
    ctx.f_minus[static_cast<size_t>(r)] = expl(-a * centered);
    ctx.p[static_cast<size_t>(r)] = static_cast<long double>(2 * (r + 1) - 1) / (n * n);
  }
  return ctx;
}

struct RunningStat {
  long double mean = 0.0L;
  long double m2 = 0.0L;
  long long count = 0;

  void add(long double x) {
    ++count;
    const long double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  double sem() const {
    if (count < 2) return 0.0;
    return static_cast<double>(sqrtl(m2 / (count - 1)) / sqrtl(static_cast<long double>(count)));
  }
};

long double binomial_coefficient(int n, int k) {
  long double c = 1.0L;
  for (int j = 1; j <= k; ++j) c = c * (n - k + j) / j;
  return c;
}

}  // namespace

DriftSet monte_carlo_drift(const Configuration& config, const ProcessParams& params, double alpha,
                           long long samples, PlacementModel model, std::uint64_t salt) {
  params.validate();
  if (samples < 1) throw std::invalid_argument("monte_carlo_drift: samples must be >= 1");
  if (config.n() != params.n) throw std::invalid_argument("monte_carlo_drift: n mismatch");

  const PotentialParams pparams{alpha, params.lambda};
  const PotentialReport before = compute_potentials(config, pparams);
  const bool gamma_defined = before.gamma_defined;
  const double gamma_scale =
      gamma_defined ? static_cast<double>(params.n) / (1.0 - params.lambda) : 0.0;

  // rank_law: pre-round ranks and the cumulative placement law are fixed
  // across samples.
  std::vector<int> order;
  std::vector<double> cum_p;
  if (model == PlacementModel::rank_law) {
    order = rank_view(config);
    cum_p.resize(static_cast<size_t>(params.n));
    double acc = 0.0;
    for (int r = 0; r < params.n; ++r) {
      acc += p_of_rank(r + 1, params.n).value();
      cum_p[static_cast<size_t>(r)] = acc;
    }
    cum_p.back() = 1.0;
  }

  Rng rng(derive_stream(params.seed, {kDriftSalt, salt}));
  std::array<RunningStat, kDriftTargetCount> stats;
  Configuration work;
  RoundOutcome out;
  for (long long s = 0; s < samples; ++s) {
    work = config;
    long long delta_psi = 0;
    if (model == PlacementModel::greedy_process) {
      step(work, params, rng, out);
      delta_psi = out.batch_size - out.deleted;
    } else {
      const long long deleted = delete_phase(work);
      const int batch = generate_batch(params, rng);
      for (int b = 0; b < batch; ++b) {
        const double u = rng.next_double();
        const auto it = std::lower_bound(cum_p.begin(), cum_p.end(), u);
        const size_t rank = static_cast<size_t>(it - cum_p.begin());
        ++work.loads[static_cast<size_t>(order[rank])];
      }
      delta_psi = batch - deleted;
    }
    const PotentialReport after = compute_potentials(work, pparams);
    const long double d_plus = static_cast<long double>(after.phi_plus) - before.phi_plus;
    const long double d_minus = static_cast<long double>(after.phi_minus) - before.phi_minus;
    stats[0].add(d_plus);
    stats[1].add(d_minus);
    stats[2].add(d_plus + d_minus);
    stats[3].add(static_cast<long double>(delta_psi));
    if (gamma_defined) {
      stats[4].add(d_plus + d_minus + static_cast<long double>(gamma_scale) * delta_psi);
    }
  }

  DriftSet result;
  result.gamma_defined = gamma_defined;
  for (int t = 0; t < kDriftTargetCount; ++t) {
    DriftEstimate& e = result.estimates[static_cast<size_t>(t)];
    e.target = static_cast<DriftTarget>(t);
    e.samples = stats[static_cast<size_t>(t)].count;
    e.mean = static_cast<double>(stats[static_cast<size_t>(t)].mean);
    e.stderr_of_mean = stats[static_cast<size_t>(t)].sem();
  }
  if (!gamma_defined) {
    result.estimates[4].mean = std::numeric_limits<double>::quiet_NaN();
    result.estimates[4].samples = 0;
  }
  return result;
}

double expected_delta_closed_form(const Configuration& config, int rank, double alpha,
                                  double lambda, Side side) {
  const int n = config.n();
  if (rank < 1 || rank > n) throw std::out_of_range("expected_delta_closed_form: rank");
  const RankContext ctx = make_rank_context(config, alpha);
  const long double a = alpha;
  const long double lam = lambda;
  const long double p = ctx.p[static_cast<size_t>(rank - 1)];
  const long double eta_i = ctx.eta[static_cast<size_t>(rank - 1)];
  if (side == Side::upper) {
    const long double alpha_hat = expm1l(a);
    const long double base = 1.0L - lam + lam * expl(-a / n) * (1.0L + alpha_hat * p);
    const long double factor = expl(-a * eta_i) * powl(base, n) - 1.0L;
    return static_cast<double>(ctx.f_plus[static_cast<size_t>(rank - 1)] * factor);
  }
  const long double alpha_check = -expm1l(-a);
  const long double base = 1.0L - lam + lam * expl(a / n) * (1.0L - alpha_check * p);
  const long double factor = expl(a * eta_i) * powl(base, n) - 1.0L;
  return static_cast<double>(ctx.f_minus[static_cast<size_t>(rank - 1)] * factor);
}

DeltaPair expected_delta_closed_form_total(const Configuration& config, double alpha,
                                           double lambda) {
  DeltaPair pair;
  long double plus = 0.0L;
  long double minus = 0.0L;
  for (int r = 1; r <= config.n(); ++r) {
    plus += expected_delta_closed_form(config, r, alpha, lambda, Side::upper);
    minus += expected_delta_closed_form(config, r, alpha, lambda, Side::lower);
  }
  pair.plus = static_cast<double>(plus);
  pair.minus = static_cast<double>(minus);
  return pair;
}

DeltaPair expected_delta_enumeration(const Configuration& config, double alpha, double lambda) {
  const int n = config.n();
  if (n > 3) throw std::invalid_argument("expected_delta_enumeration: n must be <= 3");
  const RankContext ctx = make_rank_context(config, alpha);
  const long double a = alpha;
  const long double lam = lambda;

  long double delta_plus = 0.0L;
  long double delta_minus = 0.0L;
  std::vector<int> receipts(static_cast<size_t>(n), 0);

  // Walk every composition (k_1..k_n) of K over ranks with multinomial
  // weight, for each K with its binomial weight.
  for (int batch = 0; batch <= n; ++batch) {
    const long double w_batch = binomial_coefficient(n, batch) * powl(lam, batch) *
                                powl(1.0L - lam, n - batch);
    if (w_batch <= 0.0L) continue;

    // factorial(batch) as long double
    long double batch_factorial = 1.0L;
    for (int j = 2; j <= batch; ++j) batch_factorial *= j;

    const long double shift = static_cast<long double>(batch) / n;

    // recursive composition enumeration, iterative via odometer
    std::fill(receipts.begin(), receipts.end(), 0);
    receipts[0] = batch;
    while (true) {
      long double w_place = batch_factorial;
      for (int r = 0; r < n; ++r) {
        const int k = receipts[static_cast<size_t>(r)];
        long double k_factorial = 1.0L;
        for (int j = 2; j <= k; ++j) k_factorial *= j;
        w_place = w_place / k_factorial * powl(ctx.p[static_cast<size_t>(r)], k);
      }
      const long double w = w_batch * w_place;
      for (int r = 0; r < n; ++r) {
        const long double expo =
            a * (receipts[static_cast<size_t>(r)] - ctx.eta[static_cast<size_t>(r)] - shift);
        delta_plus += w * ctx.f_plus[static_cast<size_t>(r)] * (expl(expo) - 1.0L);
        delta_minus += w * ctx.f_minus[static_cast<size_t>(r)] * (expl(-expo) - 1.0L);
      }

      // next composition of `batch` into n parts
      if (n == 1) break;
      int idx = n - 2;
      while (idx >= 0 && receipts[static_cast<size_t>(idx)] == 0) --idx;
      if (idx < 0) break;
      --receipts[static_cast<size_t>(idx)];
      int tail = batch;
      for (int r = 0; r <= idx; ++r) tail -= receipts[static_cast<size_t>(r)];
      receipts[static_cast<size_t>(idx) + 1] = tail;
      for (size_t r = static_cast<size_t>(idx) + 2; r < static_cast<size_t>(n); ++r)
        receipts[r] = 0;
    }
  }
  return DeltaPair{static_cast<double>(delta_plus), static_cast<double>(delta_minus)};
}

HajekReport hajek_conditions_one_choice(const ProcessParams& params, double eta_exponent) {
  params.validate();
  if (!(eta_exponent > 0.0))
    throw std::invalid_argument("hajek_conditions_one_choice: eta_exponent must be > 0");
  HajekReport report;
  const long double q = static_cast<long double>(params.lambda) / params.n;
  const long double x = eta_exponent;
  report.moment =
      static_cast<double>(expl(x) * powl(1.0L - q + q * expl(x), static_cast<long double>(params.n)));
  report.negative_bias = params.lambda - 1.0;
  report.degenerate = params.lambda >= 1.0;
  const double moment_term = (1.0 - params.lambda) * eta_exponent * eta_exponent / (2.0 * report.moment);
  const double recurrence_term = report.degenerate ? std::numeric_limits<double>::infinity()
                                                   : 1.0 / (2.0 * (1.0 - params.lambda));
  report.eta_star = std::min({eta_exponent, moment_term, recurrence_term});
  return report;
}

GammaDriftReport gamma_drift_check(const Configuration& config, const ProcessParams& params,
                                   double alpha, long long samples) {
  GammaDriftReport report;
  report.applicable = params.lambda >= 0.25 && params.lambda < 1.0;
  if (params.lambda > 0.0 && params.lambda < 1.0) {
    const double n4 = std::pow(static_cast<double>(params.n), 4.0);
    report.threshold = 2.0 * n4 / ((1.0 - params.lambda) * (1.0 - params.lambda) * params.lambda);
  } else {
    report.threshold = std::numeric_limits<double>::infinity();
  }
  const PotentialReport pot = compute_potentials(config, PotentialParams{alpha, params.lambda});
  report.gamma_value = pot.gamma;
  report.above_threshold = pot.gamma_defined && pot.gamma >= report.threshold;
  const DriftSet drift = monte_carlo_drift(config, params, alpha, samples);
  report.drift = drift.of(DriftTarget::delta_gamma);
  report.satisfied = !report.above_threshold ||
                     report.drift.mean + 4.0 * report.drift.stderr_of_mean <= -1.0;
  return report;
}

Claim25Report claim25_epsilon(const Configuration& config, double alpha) {
  const int n = config.n();
  const RankContext ctx = make_rank_context(config, alpha);
  Claim25Report report;
  report.floored = (n % 4) != 0;
  const int upper_cut = (3 * n) / 4;
  const int quarter_cut = n / 4;

  long double phi_plus = 0.0L;
  long double phi_minus = 0.0L;
  long double weighted_upper = 0.0L;   // sum_{i <= 3n/4} p_i F_{i,+}
  long double weighted_lower = 0.0L;   // sum_i p_i F_{i,-}
  long double quarter_lower = 0.0L;    // sum_{i <= n/4} F_{i,-}
  for (int r = 0; r < n; ++r) {
    phi_plus += ctx.f_plus[static_cast<size_t>(r)];
    phi_minus += ctx.f_minus[static_cast<size_t>(r)];
    weighted_lower += ctx.p[static_cast<size_t>(r)] * ctx.f_minus[static_cast<size_t>(r)];
    if (r < upper_cut) weighted_upper += ctx.p[static_cast<size_t>(r)] * ctx.f_plus[static_cast<size_t>(r)];
    if (r < quarter_cut) quarter_lower += ctx.f_minus[static_cast<size_t>(r)];
  }

  const long double upper_eps = (1.0L - n * weighted_upper / phi_plus) / 2.0L;
  const long double tail = phi_minus - quarter_lower;  // strictly positive: every term is
  const long double lower_eps = (n * weighted_lower / tail - 1.0L) / 2.0L;
  report.upper_epsilon = static_cast<double>(upper_eps);
  report.lower_epsilon = static_cast<double>(lower_eps);
  report.epsilon = std::max(0.0, std::min(report.upper_epsilon, report.lower_epsilon));
  return report;
}

Claim24Report claim24_check(double alpha, double lambda, int n) {
  if (!(alpha > 0.0)) throw std::invalid_argument("claim24_check: alpha must be > 0");
  Claim24Report report;
  report.bound = 1.25 * lambda;
  for (int r = 1; r <= n; ++r) {
    const DeltaTerms terms = delta_terms(r, n, lambda, alpha);
    report.max_abs_delta = std::max(
        {report.max_abs_delta, std::fabs(terms.delta_hat), std::fabs(terms.delta_check)});
  }
  const bool premise = alpha <= PotentialParams::two_choice_alpha_limit();
  report.pass = !premise || report.max_abs_delta <= report.bound + 1e-12;
  return report;
}

Claim26Report claim26_check(const Configuration& config, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("claim26_check: alpha must be >= 0");
  const int n = config.n();
  const RankContext ctx = make_rank_context(config, alpha);
  const long double a = alpha;
  long double lhs_upper = 0.0L;
  long double lhs_lower = 0.0L;
  long double phi_plus = 0.0L;
  long double phi_minus = 0.0L;
  for (int r = 0; r < n; ++r) {
    const long double ae = a * ctx.eta[static_cast<size_t>(r)];
    lhs_upper += ae * (ae - 1.0L) * ctx.f_plus[static_cast<size_t>(r)];
    lhs_lower += ae * (ae + 1.0L) * ctx.f_minus[static_cast<size_t>(r)];
    phi_plus += ctx.f_plus[static_cast<size_t>(r)];
    phi_minus += ctx.f_minus[static_cast<size_t>(r)];
  }
  const long double nu = static_cast<long double>(ctx.non_empty) / n;
  const long double eta = 1.0L - nu;
  const long double rhs_upper = a * a * eta * nu * std::min<long double>(n, phi_plus);
  const long double rhs_lower = a * a * eta * nu * phi_minus;

  Claim26Report report;
  report.lhs_upper = static_cast<double>(lhs_upper);
  report.rhs_upper = static_cast<double>(rhs_upper);
  report.lhs_lower = static_cast<double>(lhs_lower);
  report.rhs_lower = static_cast<double>(rhs_lower);
  const double slack_upper = 1e-12 * (1.0 + std::fabs(report.rhs_upper));
  const double slack_lower = 1e-12 * (1.0 + std::fabs(report.rhs_lower));
  report.upper_ok = report.lhs_upper <= report.rhs_upper + slack_upper;
  report.lower_ok = report.lhs_lower <= report.rhs_lower + slack_lower;
  return report;
}

long long one_shot_throw(long long m, long long n, Rng& rng) {
  if (m < 1 || n < 1) throw std::invalid_argument("one_shot_throw: m, n must be >= 1");
  std::vector<long long> counts(static_cast<size_t>(n), 0);
  long long max_count = 0;
  for (long long ball = 0; ball < m; ++ball) {
    const auto bin = static_cast<size_t>(rng.below(static_cast<std::uint64_t>(n)));
    max_count = std::max(max_count, ++counts[bin]);
  }
  return max_count;
}

}  // namespace binsim
