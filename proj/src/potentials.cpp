#include "binsim/potentials.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace binsim {

namespace {

// log(DBL_MAX) rounded down; exponents above this saturate to +inf.
constexpr double kExpOverflow = 709.0;

}  // namespace

Ratio reduced(long long num, long long den) {
  if (den == 0) throw std::invalid_argument("Ratio: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const long long g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return Ratio{num, den};
}

PotentialReport compute_potentials(const Configuration& config, const PotentialParams& params) {
  params.validate();
  const int n = config.n();
  if (n < 1) throw std::invalid_argument("compute_potentials: empty configuration");

  PotentialReport report;
  __int128 psi_wide = 0;
  long long non_empty = 0;
  long long max_load = config.loads[0];
  long long min_load = config.loads[0];
  for (long long load : config.loads) {
    if (load < 0) throw std::invalid_argument("compute_potentials: negative load");
    psi_wide += load;
    if (load > 0) ++non_empty;
    max_load = std::max(max_load, load);
    min_load = std::min(min_load, load);
  }
  if (psi_wide > kMaxBinLoad) throw std::overflow_error("compute_potentials: total load overflow");
  const long long psi = static_cast<long long>(psi_wide);

  report.psi = psi;
  report.avg = reduced(psi, n);
  report.avg_value = static_cast<double>(psi) / n;
  report.nu = reduced(non_empty, n);
  report.eta = reduced(n - non_empty, n);
  report.max_load = max_load;
  report.min_load = min_load;
  report.spread = max_load - min_load;

  double phi_plus = 0.0;
  double phi_minus = 0.0;
  for (long long load : config.loads) {
    // alpha * (x_i - psi/n), with the numerator kept exact.
    const __int128 num = static_cast<__int128>(load) * n - psi;
    const double centered = static_cast<double>(num) / n;
    const double expo = params.alpha * centered;
    if (expo > kExpOverflow || -expo > kExpOverflow) {
      report.overflow = true;
      if (expo > kExpOverflow) phi_plus = std::numeric_limits<double>::infinity();
      if (-expo > kExpOverflow) phi_minus = std::numeric_limits<double>::infinity();
      continue;
    }
    phi_plus += std::exp(expo);
    phi_minus += std::exp(-expo);
  }
  report.phi_plus = phi_plus;
  report.phi_minus = phi_minus;
  report.phi = phi_plus + phi_minus;

  if (params.lambda < 1.0) {
    report.gamma = report.phi + static_cast<double>(n) / (1.0 - params.lambda) * static_cast<double>(psi);
    report.gamma_defined = true;
  } else {
    report.gamma = std::numeric_limits<double>::quiet_NaN();
    report.gamma_defined = false;
  }
  return report;
}

Ratio p_of_rank(int rank, int n) {
  if (n < 1) throw std::invalid_argument("p_of_rank: n must be >= 1");
  if (rank < 1 || rank > n) throw std::out_of_range("p_of_rank: rank out of range");
  return reduced(2LL * rank - 1, static_cast<long long>(n) * n);
}

DeltaTerms delta_terms(int rank, int n, double lambda, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("delta_terms: alpha must be > 0");
  const double p = p_of_rank(rank, n).value();
  const double alpha_hat = std::expm1(alpha);
  const double alpha_check = -std::expm1(-alpha);
  const double one_hat = 1.0 + alpha / n;
  const double one_check = 1.0 - alpha / n;
  DeltaTerms terms;
  terms.delta_hat = lambda * n * (one_check / n - p * alpha_hat / alpha);
  terms.delta_check = lambda * n * (one_hat / n - p * alpha_check / alpha);
  return terms;
}

RankDerived rank_derived(const Configuration& config, int rank, double lambda, double alpha) {
  const int n = config.n();
  const auto order = rank_view(config);
  if (rank < 1 || rank > n) throw std::out_of_range("rank_derived: rank out of range");

  long long non_empty = 0;
  for (long long load : config.loads) {
    if (load > 0) ++non_empty;
  }
  const int bin = order[static_cast<size_t>(rank - 1)];
  const long long indicator = config.loads[static_cast<size_t>(bin)] > 0 ? 1 : 0;

  RankDerived out;
  out.rank = rank;
  out.p = p_of_rank(rank, n);
  out.eta_i = reduced(indicator * n - non_empty, n);
  const DeltaTerms terms = delta_terms(rank, n, lambda, alpha);
  out.delta_hat = terms.delta_hat;
  out.delta_check = terms.delta_check;
  out.alpha_hat = std::expm1(alpha);
  out.alpha_check = -std::expm1(-alpha);
  out.one_hat = 1.0 + alpha / n;
  out.one_check = 1.0 - alpha / n;
  return out;
}

double smoothness_bound_from_phi(double phi, double alpha) {
  if (!(phi > 0.0)) throw std::invalid_argument("smoothness_bound_from_phi: phi must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("smoothness_bound_from_phi: alpha must be > 0");
  return std::log(phi) / alpha;
}

}  // namespace binsim
