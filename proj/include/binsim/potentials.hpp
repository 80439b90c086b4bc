#pragma once

#include <cmath>
#include <cstdint>

#include "binsim/process.hpp"

namespace binsim {

// Exponent scale of the smoothness potential. The two-choice drift lemmas
// need alpha <= ln(10/9) and lambda in [1/4, 1]; analysis_valid() records
// whether a parameter set is inside that regime.
struct PotentialParams {
  double alpha = 0.1;
  double lambda = 0.5;

  bool analysis_valid() const {
    return alpha > 0.0 && alpha <= two_choice_alpha_limit() && lambda >= 0.25 && lambda <= 1.0;
  }

  static double two_choice_alpha_limit() { return std::log(10.0 / 9.0); }

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("PotentialParams: alpha must be > 0");
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("PotentialParams: lambda must be in [0,1]");
  }
};

// Small exact rational; keeps average-load and bin-fraction bookkeeping free
// of float drift.
struct Ratio {
  long long num = 0;
  long long den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Ratio&) const = default;
};

Ratio reduced(long long num, long long den);

// Every functional of one configuration:
//   phi_plus  = sum_i e^{alpha (x_i - avg)}        (upper smoothness part)
//   phi_minus = sum_i e^{alpha (avg - x_i)}        (lower smoothness part)
//   phi       = phi_plus + phi_minus
//   psi       = sum_i x_i                          (total load, exact)
//   gamma     = phi + n/(1-lambda) * psi           (undefined at lambda = 1)
// plus the average load (exact and as double), non-empty/empty fractions,
// and max/min/spread. Exponents past the double range saturate phi to +inf
// and set the overflow flag instead of aborting: extreme seeded
// configurations are legitimate drift-experiment inputs.
struct PotentialReport {
  double phi_plus = 0.0;
  double phi_minus = 0.0;
  double phi = 0.0;
  long long psi = 0;
  double gamma = 0.0;
  bool gamma_defined = true;
  Ratio avg;
  double avg_value = 0.0;
  Ratio nu;   // fraction of non-empty bins
  Ratio eta;  // fraction of empty bins, nu + eta = 1
  long long max_load = 0;
  long long min_load = 0;
  long long spread = 0;
  bool overflow = false;
};

PotentialReport compute_potentials(const Configuration& config, const PotentialParams& params);

// Probability that a two-choice ball lands in the i-th fullest bin
// (1-based rank): (2i-1)/n^2, exact.
Ratio p_of_rank(int rank, int n);

// delta_hat_i = lambda n (one_check/n - p_i alpha_hat/alpha)
// delta_check_i = lambda n (one_hat/n  - p_i alpha_check/alpha)
// with alpha_hat = e^alpha - 1, alpha_check = 1 - e^-alpha,
// one_hat = 1 + alpha/n, one_check = 1 - alpha/n.
struct DeltaTerms {
  double delta_hat = 0.0;
  double delta_check = 0.0;
};

DeltaTerms delta_terms(int rank, int n, double lambda, double alpha);

// All per-rank constants in one record, for a given configuration.
struct RankDerived {
  int rank = 1;          // 1-based
  Ratio p;               // (2i-1)/n^2
  Ratio eta_i;           // indicator(rank-i bin non-empty) - nu
  double delta_hat = 0.0;
  double delta_check = 0.0;
  double alpha_hat = 0.0;
  double alpha_check = 0.0;
  double one_hat = 0.0;
  double one_check = 0.0;
};

RankDerived rank_derived(const Configuration& config, int rank, double lambda, double alpha);

// The b with phi <= e^{alpha b}, i.e. ln(phi)/alpha. Any configuration with
// smoothness potential phi has |x_i - avg| <= b for every bin, hence spread
// at most 2b.
double smoothness_bound_from_phi(double phi, double alpha);

}  // namespace binsim
