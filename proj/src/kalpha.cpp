#include <cmath>
#include <limits>
#include <stdexcept>

#include "binsim/analysis.hpp"

namespace binsim {

namespace {

long double d_c_equation(long double c, long double x) {
  return 1.0L + x * (logl(c) - logl(x) + 1.0L) - c;
}

bool near(double value, double cutoff) {
  if (cutoff <= 0.0) return false;
  const double ratio = value / cutoff;
  return ratio >= 0.8 && ratio <= 1.25;
}

}  // namespace

double solve_d_c(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("solve_d_c: c must be > 0");
  const long double cl = c;
  // f rises on (0, c] with f(c) = 1 and falls to -inf beyond, so the largest
  // root sits in (c, inf). Bracket by doubling, then bisect.
  long double lo = cl;
  long double hi = std::max(2.0L * cl, 8.0L);
  while (d_c_equation(cl, hi) > 0.0L) hi *= 2.0L;
  for (int iter = 0; iter < 200; ++iter) {
    const long double mid = 0.5L * (lo + hi);
    if (d_c_equation(cl, mid) > 0.0L) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return static_cast<double>(0.5L * (lo + hi));
}

double k_alpha_formula(long long m, long long n, double alpha, KAlphaRegime regime) {
  if (m < 1 || n < 3) throw std::invalid_argument("k_alpha_formula: need m >= 1, n >= 3");
  if (!(alpha > 0.0)) throw std::invalid_argument("k_alpha_formula: alpha must be > 0");
  const double log_n = std::log(static_cast<double>(n));
  const double load = static_cast<double>(m) / static_cast<double>(n);
  switch (regime) {
    case KAlphaRegime::below_log: {
      const double r = static_cast<double>(n) * log_n / static_cast<double>(m);
      const double log_r = std::log(r);
      if (!(log_r > 0.0))
        throw std::invalid_argument("k_alpha_formula: below_log regime needs m < n ln n");
      return log_n / log_r * (1.0 + alpha * std::log(log_r) / log_r);
    }
    case KAlphaRegime::log_factor: {
      const double c = static_cast<double>(m) / (static_cast<double>(n) * log_n);
      return (solve_d_c(c) - 1.0 + alpha) * log_n;
    }
    case KAlphaRegime::above_log:
      return load + alpha * std::sqrt(2.0 * load * log_n);
    case KAlphaRegime::heavy:
      return load + std::sqrt(2.0 * load * log_n *
                              (1.0 - (1.0 / alpha) * std::log(log_n) / (2.0 * log_n)));
  }
  throw std::logic_error("k_alpha_formula: unknown regime");
}

// Regime detection. The theorem separates the regimes asymptotically
// (m << n ln n, m = c n ln n, ...); concrete cutoffs on c = m/(n ln n):
//   heavy      when m > n (ln n)^3
//   above_log  when c >= ln ln n
//   log_factor when 1/ln n <= c < ln ln n  (so m = n lands here, flagged)
//   below_log  when c < 1/ln n
// Near-cutoff inputs are flagged and assigned to the nearest regime.
KAlphaResult k_alpha(long long m, long long n, double alpha) {
  if (m < 1 || n < 3) throw std::invalid_argument("k_alpha: need m >= 1, n >= 3");
  const double log_n = std::log(static_cast<double>(n));
  const double log_log_n = std::log(log_n);
  const double c = static_cast<double>(m) / (static_cast<double>(n) * log_n);
  const double heavy_cut = static_cast<double>(n) * log_n * log_n * log_n;

  KAlphaResult result;
  result.c = c;
  result.d_c = std::numeric_limits<double>::quiet_NaN();
  if (static_cast<double>(m) > heavy_cut) {
    result.regime = KAlphaRegime::heavy;
  } else if (c >= log_log_n) {
    result.regime = KAlphaRegime::above_log;
  } else if (c >= 1.0 / log_n) {
    result.regime = KAlphaRegime::log_factor;
    result.d_c = solve_d_c(c);
  } else {
    result.regime = KAlphaRegime::below_log;
  }
  result.near_boundary = near(static_cast<double>(m), heavy_cut) || near(c, log_log_n) ||
                         near(c, 1.0 / log_n);
  result.value = k_alpha_formula(m, n, alpha, result.regime);
  return result;
}

}  // namespace binsim
