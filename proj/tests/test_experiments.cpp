#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "binsim/experiments.hpp"

using namespace binsim;

namespace {

ExperimentSpec small_spec(Scenario scenario) {
  ExperimentSpec spec;
  spec.scenario = scenario;
  spec.n_grid = {16};
  spec.lambda_grid = {0.5};
  spec.trials = 20;
  spec.seed = 314159;
  return spec;
}

}  // namespace

TEST_CASE("horizon rules") {
  ExperimentSpec spec = small_spec(Scenario::lowerbound);
  CHECK(horizon_rounds(spec, 1024, 0.9) == 88);
  CHECK(horizon_rounds(spec, 256, 0.9) == 71);
  CHECK(horizon_rounds(spec, 4096, 0.9) == 106);

  spec = small_spec(Scenario::maxload2);
  CHECK(horizon_rounds(spec, 64, 0.5) ==
        static_cast<long long>(std::ceil(10.0 * std::log(64.0) / 0.5)));
  // The warm-up denominator is clamped at 0.01.
  CHECK(horizon_rounds(spec, 64, 1.0) ==
        static_cast<long long>(std::ceil(10.0 * std::log(64.0) / 0.01)));

  spec.horizon = HorizonRule::fixed_rounds;
  spec.fixed_rounds = 123;
  CHECK(horizon_rounds(spec, 64, 0.5) == 123);
}

TEST_CASE("spec validation") {
  ExperimentSpec spec = small_spec(Scenario::lowerbound);
  spec.lambda_grid = {0.4};  // below the theorem's premise
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec(Scenario::maxload1);
  spec.lambda_grid = {1.0};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec(Scenario::smoothness);
  spec.lambda_grid = {1.0};  // allowed here
  CHECK_NOTHROW(spec.validate());
  spec.n_grid = {};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("identical specs reproduce identical results") {
  const ExperimentSpec spec = small_spec(Scenario::maxload2);
  const ExperimentResult a = run_scenario(spec);
  const ExperimentResult b = run_scenario(spec);
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    REQUIRE(a.rows[i].max_load == b.rows[i].max_load);
    REQUIRE(a.rows[i].phi == b.rows[i].phi);
    REQUIRE(a.rows[i].ratio == b.rows[i].ratio);
  }
  CHECK(a.pass == b.pass);

  // Threaded execution merges by trial index, so the rows do not change.
  ExperimentSpec threaded = spec;
  threaded.threads = 2;
  const ExperimentResult c = run_scenario(threaded);
  REQUIRE(c.rows.size() == a.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    REQUIRE(c.rows[i].max_load == a.rows[i].max_load);
    REQUIRE(c.rows[i].psi == a.rows[i].psi);
  }
}

TEST_CASE("rows arrive in grid, trial, snapshot order and quantiles are monotone") {
  ExperimentSpec spec = small_spec(Scenario::maxload2);
  spec.n_grid = {8, 16};
  spec.lambda_grid = {0.5, 0.9};
  spec.snapshot_times = {20, 40};
  const ExperimentResult result = run_scenario(spec);
  REQUIRE(result.rows.size() == 2u * 2u * 20u * 2u);
  size_t idx = 0;
  for (int n : {8, 16}) {
    for (double lambda : {0.5, 0.9}) {
      for (int trial = 0; trial < 20; ++trial) {
        for (long long t : {20LL, 40LL}) {
          REQUIRE(result.rows[idx].n == n);
          REQUIRE(result.rows[idx].lambda == lambda);
          REQUIRE(result.rows[idx].trial == trial);
          REQUIRE(result.rows[idx].snapshot_t == t);
          ++idx;
        }
      }
    }
  }
  for (const CellStats& cell : result.cells) {
    REQUIRE(cell.max_load.q50 <= cell.max_load.q90);
    REQUIRE(cell.max_load.q90 <= cell.max_load.q95);
    REQUIRE(cell.max_load.q95 <= cell.max_load.q99);
  }
}

TEST_CASE("one-choice at lambda 0 stays empty") {
  ExperimentSpec spec = small_spec(Scenario::maxload1);
  spec.lambda_grid = {0.0};
  spec.snapshot_times = {5, 50};
  const ExperimentResult result = run_scenario(spec);
  for (const ResultRow& row : result.rows) {
    REQUIRE(row.max_load == 0);
    REQUIRE(row.pass);
  }
  CHECK(result.pass);
}

TEST_CASE("self-stabilization at lambda 0 gives identical snapshots") {
  ExperimentSpec spec = small_spec(Scenario::selfstab);
  spec.lambda_grid = {0.0};
  spec.snapshot_times = {100, 1000};
  const ExperimentResult result = run_scenario(spec);
  CHECK(result.pass);
  CHECK(result.metrics.at("mean_diff/n=16,l=0") == doctest::Approx(0.0));
  CHECK(result.metrics.at("ks/n=16,l=0") == doctest::Approx(0.0));
}

TEST_CASE("self-stabilization smoke at moderate scale") {
  ExperimentSpec spec = small_spec(Scenario::selfstab);
  spec.lambda_grid = {0.9};
  spec.trials = 40;
  spec.snapshot_times = {400, 4000};
  const ExperimentResult result = run_scenario(spec);
  CHECK(result.pass);
}

TEST_CASE("lower bound: max load beats the trivial average floor") {
  ExperimentSpec spec = small_spec(Scenario::lowerbound);
  spec.n_grid = {64};
  spec.lambda_grid = {0.5};
  spec.trials = 30;
  const ExperimentResult result = run_scenario(spec);
  for (const ResultRow& row : result.rows) {
    REQUIRE(static_cast<double>(row.max_load) >=
            static_cast<double>(row.psi) / static_cast<double>(row.n) - 1e-9);
  }
}

TEST_CASE("two-choice cells track the psi bound") {
  ExperimentSpec spec = small_spec(Scenario::maxload2);
  spec.n_grid = {32};
  spec.lambda_grid = {0.5, 0.9};
  spec.trials = 40;
  const ExperimentResult result = run_scenario(spec);
  for (const CellStats& cell : result.cells) {
    REQUIRE(cell.psi_ratio > 0.0);
    REQUIRE(cell.psi_ratio < 1.0);
  }
  CHECK(result.pass);
}

TEST_CASE("smoothness scenario records the empirical epsilon") {
  ExperimentSpec spec = small_spec(Scenario::smoothness);
  spec.n_grid = {16, 32};
  spec.lambda_grid = {0.9};
  spec.trials = 30;
  const ExperimentResult result = run_scenario(spec);
  CHECK(result.metrics.count("epsilon_hat/n=16,l=0.9") == 1);
  CHECK(result.metrics.count("trend/n=0,l=0.9") == 1);
  CHECK(result.metrics.at("epsilon_hat/n=16,l=0.9") > 0.0);
}

TEST_CASE("uniform shelf keeps phi near the floor; spikes drift down") {
  ExperimentSpec spec = small_spec(Scenario::driftval);
  spec.n_grid = {16};
  spec.lambda_grid = {0.9};
  spec.drift_samples = 3000;
  const ExperimentResult result = run_scenario(spec);
  CHECK(result.pass);
  CHECK(result.metrics.at("rho_hat/n=16,l=0.9") > 0.0);
  CHECK(result.metrics.at("rho_hat/n=16,l=0.9") <= 1.0);

  // The explicit spike rows sit above the high-potential floor and must
  // show negative measured drift.
  bool saw_spike = false;
  for (const ResultRow& row : result.rows) {
    if (row.spread >= 64 && row.min_load == 0) {
      saw_spike = true;
      REQUIRE(row.ratio < 0.0);
    }
  }
  CHECK(saw_spike);
}
