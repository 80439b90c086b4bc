#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "binsim/potentials.hpp"
#include "test_util.hpp"

using namespace binsim;

TEST_CASE("all-zero configuration") {
  const Configuration c{{0, 0, 0, 0}, 0};
  const PotentialReport r = compute_potentials(c, PotentialParams{0.1, 0.5});
  CHECK(r.psi == 0);
  CHECK(r.avg.num == 0);
  CHECK(r.phi_plus == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(r.phi_minus == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(r.phi == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(r.nu.num == 0);
  CHECK(r.eta == Ratio{1, 1});
  CHECK_FALSE(r.overflow);
}

TEST_CASE("uniform configuration: phi at its floor, gamma by definition") {
  const Configuration c{{2, 2, 2, 2}, 0};
  const PotentialReport r = compute_potentials(c, PotentialParams{0.1, 0.5});
  CHECK(r.phi == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(r.psi == 8);
  CHECK(r.gamma == doctest::Approx(72.0).epsilon(1e-14));
  CHECK(r.avg == Ratio{2, 1});
  CHECK(r.nu == Ratio{1, 1});
}

TEST_CASE("two bins (3,1): frozen high-precision value") {
  const Configuration c{{3, 1}, 0};
  const PotentialReport r = compute_potentials(c, PotentialParams{0.1, 0.5});
  // 2 (e^{0.1} + e^{-0.1}), evaluated independently at 40 digits.
  CHECK(r.phi == doctest::Approx(4.0200166722232144).epsilon(1e-14));
  CHECK(r.spread == 2);
}

TEST_CASE("gamma is flagged undefined at lambda 1") {
  const Configuration c{{1, 2}, 0};
  const PotentialReport r = compute_potentials(c, PotentialParams{0.1, 1.0});
  CHECK_FALSE(r.gamma_defined);
  CHECK(std::isnan(r.gamma));
}

TEST_CASE("extreme exponents saturate with the overflow flag") {
  const Configuration c{{200000, 0}, 0};
  const PotentialReport r = compute_potentials(c, PotentialParams{1.0, 0.5});
  CHECK(r.overflow);
  CHECK(std::isinf(r.phi_plus));
  CHECK(std::isinf(r.phi_minus));
}

TEST_CASE("analysis-validity flag tracks the two-choice lemma window") {
  CHECK(PotentialParams{0.1, 0.5}.analysis_valid());
  CHECK(PotentialParams{0.1, 1.0}.analysis_valid());
  CHECK_FALSE(PotentialParams{0.11, 0.5}.analysis_valid());   // alpha > ln(10/9)
  CHECK_FALSE(PotentialParams{0.1, 0.2}.analysis_valid());    // lambda < 1/4
  CHECK(PotentialParams{0.1, 0.25}.analysis_valid());
}

TEST_CASE("p_of_rank: exact values and telescoping sum") {
  CHECK(p_of_rank(1, 2) == Ratio{1, 4});
  CHECK(p_of_rank(2, 2) == Ratio{3, 4});
  CHECK(p_of_rank(1, 1) == Ratio{1, 1});
  CHECK_THROWS_AS(p_of_rank(0, 4), std::out_of_range);
  CHECK_THROWS_AS(p_of_rank(5, 4), std::out_of_range);

  for (int n = 1; n <= 64; ++n) {
    long long num = 0;
    double prev = 0.0;
    for (int i = 1; i <= n; ++i) {
      const Ratio p = p_of_rank(i, n);
      num += p.num * (static_cast<long long>(n) * n / p.den);
      REQUIRE(p.value() > prev);
      prev = p.value();
    }
    REQUIRE(num == static_cast<long long>(n) * n);
  }
}

TEST_CASE("delta_terms: zero at lambda 0 and matching a direct re-derivation") {
  const DeltaTerms zero = delta_terms(3, 10, 0.0, 0.1);
  CHECK(zero.delta_hat == 0.0);
  CHECK(zero.delta_check == 0.0);

  const int n = 100;
  const double lambda = 0.5;
  const double alpha = 0.1;
  const DeltaTerms t = delta_terms(1, n, lambda, alpha);
  // Independent spelling of the same definition.
  const double p = 1.0 / (static_cast<double>(n) * n);
  const double expected_hat =
      lambda * n * ((1.0 - alpha / n) / n - p * (std::exp(alpha) - 1.0) / alpha);
  const double expected_check =
      lambda * n * ((1.0 + alpha / n) / n - p * (1.0 - std::exp(-alpha)) / alpha);
  CHECK(t.delta_hat == doctest::Approx(expected_hat).epsilon(1e-13));
  CHECK(t.delta_check == doctest::Approx(expected_check).epsilon(1e-13));
}

TEST_CASE("delta_terms bound inside the small-alpha window") {
  for (double lambda : {0.1, 0.5, 1.0}) {
    for (int n : {2, 10, 100}) {
      for (int i = 1; i <= n; ++i) {
        const DeltaTerms t = delta_terms(i, n, lambda, 0.1);
        REQUIRE(std::max(std::fabs(t.delta_hat), std::fabs(t.delta_check)) <= 1.25 * lambda + 1e-12);
      }
    }
  }
}

TEST_CASE("smoothness bound: inverse of the definition") {
  const double alpha = 0.17;
  CHECK(smoothness_bound_from_phi(std::exp(alpha * 5.0), alpha) == doctest::Approx(5.0));
  CHECK_THROWS_AS(smoothness_bound_from_phi(0.0, alpha), std::invalid_argument);
  CHECK_THROWS_AS(smoothness_bound_from_phi(-1.0, alpha), std::invalid_argument);

  const Configuration uniform{{3, 3, 3, 3, 3, 3}, 0};
  const PotentialReport r = compute_potentials(uniform, PotentialParams{alpha, 0.5});
  const double b = smoothness_bound_from_phi(r.phi, alpha);
  CHECK(b == doctest::Approx(std::log(12.0) / alpha));
  CHECK(static_cast<double>(r.spread) <= 2.0 * b);
}

TEST_CASE("spread is bounded by twice the smoothness bound, per-term domination holds") {
  const double alpha = 0.1;
  Rng meta(404);
  for (int rep = 0; rep < 10000; ++rep) {
    const int n = 1 + static_cast<int>(meta.below(10));
    const Configuration c = binsim::test::random_config(meta, n, 20);
    const PotentialReport r = compute_potentials(c, PotentialParams{alpha, 0.5});
    const double b = smoothness_bound_from_phi(r.phi, alpha);
    REQUIRE(static_cast<double>(r.spread) <= 2.0 * b + 1e-9);
    REQUIRE(static_cast<double>(r.max_load) - r.avg_value <= std::log(r.phi_plus) / alpha + 1e-9);
    REQUIRE(r.avg_value - static_cast<double>(r.min_load) <= std::log(r.phi_minus) / alpha + 1e-9);
  }
}

TEST_CASE("phi is relabeling-invariant and at least 2n with equality iff uniform") {
  const PotentialParams params{0.1, 0.5};
  Rng meta(9);
  for (int rep = 0; rep < 500; ++rep) {
    const int n = 2 + static_cast<int>(meta.below(8));
    Configuration c = binsim::test::random_config(meta, n, 9);
    const PotentialReport r = compute_potentials(c, params);

    std::vector<long long> shuffled = c.loads;
    for (int i = n - 1; i > 0; --i) {
      std::swap(shuffled[static_cast<size_t>(i)],
                shuffled[static_cast<size_t>(meta.below(static_cast<std::uint64_t>(i + 1)))]);
    }
    const PotentialReport rs = compute_potentials(Configuration{shuffled, 0}, params);
    REQUIRE(r.phi == doctest::Approx(rs.phi).epsilon(1e-12));

    REQUIRE(r.phi >= 2.0 * n - 1e-9);
    const bool uniform = r.spread == 0;
    if (uniform) {
      REQUIRE(r.phi == doctest::Approx(2.0 * n).epsilon(1e-12));
    } else {
      REQUIRE(r.phi > 2.0 * n + 1e-12);
    }
  }
}

TEST_CASE("rank_derived: eta_i values and the taylor windows") {
  const Configuration c{{4, 2, 0, 0}, 0};
  // nu = 1/2; non-empty ranks carry eta, empty ranks carry -nu.
  const RankDerived first = rank_derived(c, 1, 0.5, 0.1);
  CHECK(first.eta_i == Ratio{1, 2});
  const RankDerived last = rank_derived(c, 4, 0.5, 0.1);
  CHECK(last.eta_i == Ratio{-1, 2});

  long long eta_sum = 0;
  for (int i = 1; i <= 4; ++i) {
    const RankDerived d = rank_derived(c, i, 0.5, 0.1);
    eta_sum += d.eta_i.num * (4 / d.eta_i.den);
  }
  CHECK(eta_sum == 0);

  for (double alpha = 0.01; alpha < 1.7; alpha += 0.0173) {
    const RankDerived d = rank_derived(c, 1, 0.5, alpha);
    REQUIRE(d.alpha_hat > alpha);
    REQUIRE(d.alpha_hat < alpha + alpha * alpha);
    REQUIRE(d.alpha_check < alpha);
    REQUIRE(d.alpha_check > alpha - alpha * alpha);
    REQUIRE(d.one_hat == doctest::Approx(1.0 + alpha / 4));
    REQUIRE(d.one_check == doctest::Approx(1.0 - alpha / 4));
  }
}
