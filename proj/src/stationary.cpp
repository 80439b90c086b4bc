#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "binsim/analysis.hpp"

namespace binsim {

namespace {

constexpr long long kMaxStates = 200000;

struct Transition {
  long long to;
  double prob;
};

// Per-ball placement law of Greedy[d] against a fixed snapshot: enumerate
// all n^d ordered choice tuples, give the minimum-load choice the mass,
// splitting uniformly across distinct tied bins. Matches allocate_greedy.
std::vector<double> ball_distribution(const std::vector<long long>& snapshot, int n, int d) {
  std::vector<double> q(static_cast<size_t>(n), 0.0);
  const double tuple_weight = std::pow(static_cast<double>(n), -d);
  std::vector<int> tuple(static_cast<size_t>(d), 0);
  std::vector<int> tied;
  tied.reserve(static_cast<size_t>(d));
  while (true) {
    long long best = snapshot[static_cast<size_t>(tuple[0])];
    for (int j = 1; j < d; ++j) best = std::min(best, snapshot[static_cast<size_t>(tuple[j])]);
    tied.clear();
    for (int j = 0; j < d; ++j) {
      const int bin = tuple[static_cast<size_t>(j)];
      if (snapshot[static_cast<size_t>(bin)] != best) continue;
      if (std::find(tied.begin(), tied.end(), bin) == tied.end()) tied.push_back(bin);
    }
    const double share = tuple_weight / static_cast<double>(tied.size());
    for (int bin : tied) q[static_cast<size_t>(bin)] += share;

    int idx = d - 1;
    while (idx >= 0 && tuple[static_cast<size_t>(idx)] == n - 1) {
      tuple[static_cast<size_t>(idx)] = 0;
      --idx;
    }
    if (idx < 0) break;
    ++tuple[static_cast<size_t>(idx)];
  }
  return q;
}

double binomial_coefficient(int n, int k) {
  double c = 1.0;
  for (int j = 1; j <= k; ++j) c = c * (n - k + j) / j;
  return c;
}

}  // namespace

long long StationarySummary::state_index(const std::vector<long long>& loads) const {
  if (static_cast<int>(loads.size()) != n)
    throw std::invalid_argument("state_index: wrong dimension");
  long long index = 0;
  long long radix = 1;
  for (int i = 0; i < n; ++i) {
    if (loads[static_cast<size_t>(i)] < 0 || loads[static_cast<size_t>(i)] > load_cap)
      throw std::out_of_range("state_index: load outside [0, cap]");
    index += loads[static_cast<size_t>(i)] * radix;
    radix *= load_cap + 1;
  }
  return index;
}

double StationarySummary::mass_of(const std::vector<long long>& loads) const {
  return distribution[static_cast<size_t>(state_index(loads))];
}

StationarySummary stationary_oracle(const ProcessParams& params, long long load_cap,
                                    double tolerance, long long max_iterations) {
  params.validate();
  if (params.n > 3) throw std::invalid_argument("stationary_oracle: n must be <= 3");
  if (load_cap < 1) throw std::invalid_argument("stationary_oracle: load_cap must be >= 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("stationary_oracle: tolerance must be > 0");

  const int n = params.n;
  const long long base = load_cap + 1;
  long long state_count = 1;
  for (int i = 0; i < n; ++i) {
    state_count *= base;
    if (state_count > kMaxStates) throw std::invalid_argument("stationary_oracle: state space too large");
  }

  // Exact transition rows. From each state: deterministic deletion, then
  // K ~ Binomial(n, lambda) balls placed iid by the Greedy[d] snapshot law.
  std::vector<std::vector<Transition>> rows(static_cast<size_t>(state_count));
  std::vector<long long> loads(static_cast<size_t>(n));
  std::vector<long long> landed(static_cast<size_t>(n));
  std::vector<int> receipts(static_cast<size_t>(n));
  std::vector<double> batch_weight(static_cast<size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    batch_weight[static_cast<size_t>(k)] = binomial_coefficient(n, k) *
                                           std::pow(params.lambda, k) *
                                           std::pow(1.0 - params.lambda, n - k);
  }

  for (long long s = 0; s < state_count; ++s) {
    long long rem = s;
    for (int i = 0; i < n; ++i) {
      loads[static_cast<size_t>(i)] = rem % base;
      rem /= base;
    }
    for (int i = 0; i < n; ++i) {
      if (loads[static_cast<size_t>(i)] > 0) --loads[static_cast<size_t>(i)];
    }
    const std::vector<double> q = ball_distribution(loads, n, params.d);

    auto& row = rows[static_cast<size_t>(s)];
    for (int batch = 0; batch <= n; ++batch) {
      const double w_batch = batch_weight[static_cast<size_t>(batch)];
      if (w_batch <= 0.0) continue;
      double batch_factorial = 1.0;
      for (int j = 2; j <= batch; ++j) batch_factorial *= j;

      std::fill(receipts.begin(), receipts.end(), 0);
      receipts[0] = batch;
      while (true) {
        double w_place = batch_factorial;
        for (int i = 0; i < n; ++i) {
          const int k = receipts[static_cast<size_t>(i)];
          double k_factorial = 1.0;
          for (int j = 2; j <= k; ++j) k_factorial *= j;
          w_place = w_place / k_factorial * std::pow(q[static_cast<size_t>(i)], k);
        }
        if (w_place > 0.0) {
          long long to = 0;
          long long radix = 1;
          for (int i = 0; i < n; ++i) {
            landed[static_cast<size_t>(i)] =
                std::min(loads[static_cast<size_t>(i)] + receipts[static_cast<size_t>(i)], load_cap);
            to += landed[static_cast<size_t>(i)] * radix;
            radix *= base;
          }
          const double w = w_batch * w_place;
          bool merged = false;
          for (auto& entry : row) {
            if (entry.to == to) {
              entry.prob += w;
              merged = true;
              break;
            }
          }
          if (!merged) row.push_back(Transition{to, w});
        }

        if (n == 1) break;
        int idx = n - 2;
        while (idx >= 0 && receipts[static_cast<size_t>(idx)] == 0) --idx;
        if (idx < 0) break;
        --receipts[static_cast<size_t>(idx)];
        int tail = batch;
        for (int i = 0; i <= idx; ++i) tail -= receipts[static_cast<size_t>(i)];
        receipts[static_cast<size_t>(idx) + 1] = tail;
        for (size_t i = static_cast<size_t>(idx) + 2; i < static_cast<size_t>(n); ++i)
          receipts[i] = 0;
      }
    }
  }

  // Power iteration from the empty configuration.
  std::vector<double> pi(static_cast<size_t>(state_count), 0.0);
  std::vector<double> next(static_cast<size_t>(state_count), 0.0);
  pi[0] = 1.0;
  double residual = std::numeric_limits<double>::infinity();
  long long iterations = 0;
  while (iterations < max_iterations) {
    std::fill(next.begin(), next.end(), 0.0);
    for (long long s = 0; s < state_count; ++s) {
      const double mass = pi[static_cast<size_t>(s)];
      if (mass == 0.0) continue;
      for (const Transition& t : rows[static_cast<size_t>(s)]) {
        next[static_cast<size_t>(t.to)] += mass * t.prob;
      }
    }
    double total = 0.0;
    for (double v : next) total += v;
    for (double& v : next) v /= total;
    residual = 0.0;
    for (long long s = 0; s < state_count; ++s) {
      residual += std::fabs(next[static_cast<size_t>(s)] - pi[static_cast<size_t>(s)]);
    }
    pi.swap(next);
    ++iterations;
    if (residual <= tolerance) break;
  }
  if (residual > tolerance)
    throw std::runtime_error("stationary_oracle: power iteration did not converge");

  StationarySummary summary;
  summary.n = n;
  summary.lambda = params.lambda;
  summary.d = params.d;
  summary.load_cap = load_cap;
  summary.state_count = state_count;
  summary.distribution = std::move(pi);
  summary.iterations = iterations;
  summary.residual = residual;
  for (long long s = 0; s < state_count; ++s) {
    long long rem = s;
    long long max_load = 0;
    bool at_cap = false;
    for (int i = 0; i < n; ++i) {
      const long long load = rem % base;
      rem /= base;
      max_load = std::max(max_load, load);
      at_cap = at_cap || load == load_cap;
    }
    const double mass = summary.distribution[static_cast<size_t>(s)];
    summary.expected_max_load += mass * static_cast<double>(max_load);
    if (at_cap) summary.cap_mass += mass;
  }
  return summary;
}

}  // namespace binsim
