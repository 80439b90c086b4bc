#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "binsim/rng.hpp"

namespace binsim {

// Loads beyond this are treated as a fatal error. Unreachable at desk scale;
// a round can add at most n balls to a bin.
inline constexpr long long kMaxBinLoad = 1LL << 62;

inline constexpr int kMaxChoices = 16;

// One process instance: n bins and n generators, each generator spawns a
// ball per round with probability lambda, balls are placed with Greedy[d].
struct ProcessParams {
  int n = 1;
  double lambda = 0.5;
  int d = 2;
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 1) throw std::invalid_argument("ProcessParams: n must be >= 1");
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("ProcessParams: lambda must be in [0,1]");
    if (d < 1 || d > kMaxChoices)
      throw std::invalid_argument("ProcessParams: d out of range");
  }
};

// Markov chain state: per-bin loads plus the round counter.
struct Configuration {
  std::vector<long long> loads;
  long long round = 0;

  static Configuration empty(int n) { return Configuration{std::vector<long long>(static_cast<size_t>(n), 0), 0}; }

  int n() const { return static_cast<int>(loads.size()); }
  bool operator==(const Configuration&) const = default;
};

// What happened in one round: deletions, batch size, and where balls went.
struct RoundOutcome {
  long long deleted = 0;
  int batch_size = 0;
  std::vector<int> placements;       // bin id per ball, in ball order
  std::vector<long long> receipts;   // per-bin counts, sums to batch_size
};

// Deletion phase: every non-empty bin drops one ball. Returns how many bins
// were non-empty (= number of deletions).
long long delete_phase(Configuration& config);

// Ranks bins from fullest (rank 0) to emptiest, ties broken by ascending
// bin id. rank_view(c)[r] is the bin id holding rank r+1.
std::vector<int> rank_view(const Configuration& config);

// Batch size for one round: each of the n generators spawns independently
// with probability lambda, so K ~ Binomial(n, lambda). Consumes exactly n
// bernoulli draws, in generator order.
template <RandomSource R>
int generate_batch(const ProcessParams& params, R& rng) {
  int k = 0;
  for (int i = 0; i < params.n; ++i) {
    if (rng.bernoulli(params.lambda)) ++k;
  }
  return k;
}

// Greedy[d] for a single ball against a fixed snapshot: sample d bins
// uniformly with replacement, place in a least loaded sample. Ties between
// distinct sampled bins are broken uniformly at random (one extra draw, only
// when at least two distinct bins share the minimum).
//
// Draw order per ball: d bin draws in slot order, then the optional
// tie-break draw.
template <RandomSource R>
int allocate_greedy(const std::vector<long long>& snapshot, int d, R& rng,
                    std::vector<int>* sampled = nullptr) {
  const auto n = static_cast<std::uint64_t>(snapshot.size());
  int choice[kMaxChoices];
  for (int j = 0; j < d; ++j) {
    choice[j] = static_cast<int>(rng.sample_bin(n));
    if (sampled) sampled->push_back(choice[j]);
  }
  long long best = snapshot[static_cast<size_t>(choice[0])];
  for (int j = 1; j < d; ++j) best = std::min(best, snapshot[static_cast<size_t>(choice[j])]);

  // Distinct minimum-load candidates, kept in slot order.
  int tied[kMaxChoices];
  int tied_count = 0;
  for (int j = 0; j < d; ++j) {
    if (snapshot[static_cast<size_t>(choice[j])] != best) continue;
    bool seen = false;
    for (int t = 0; t < tied_count; ++t) {
      if (tied[t] == choice[j]) {
        seen = true;
        break;
      }
    }
    if (!seen) tied[tied_count++] = choice[j];
  }
  if (tied_count == 1) return tied[0];
  return tied[static_cast<size_t>(rng.below(static_cast<std::uint64_t>(tied_count)))];
}

// One synchronous round: deletion, batch generation, then K parallel
// placements that all read the post-deletion snapshot (receipts are applied
// after the whole batch is allocated).
template <RandomSource R>
void step(Configuration& config, const ProcessParams& params, R& rng, RoundOutcome& out) {
  out.deleted = delete_phase(config);
  out.batch_size = generate_batch(params, rng);
  out.placements.clear();
  out.receipts.assign(config.loads.size(), 0);
  for (int b = 0; b < out.batch_size; ++b) {
    const int bin = allocate_greedy(config.loads, params.d, rng);
    out.placements.push_back(bin);
    ++out.receipts[static_cast<size_t>(bin)];
  }
  for (size_t i = 0; i < config.loads.size(); ++i) {
    config.loads[i] += out.receipts[i];
    if (config.loads[i] > kMaxBinLoad) throw std::overflow_error("bin load overflow");
  }
  ++config.round;
}

template <RandomSource R>
RoundOutcome step(Configuration& config, const ProcessParams& params, R& rng) {
  RoundOutcome out;
  step(config, params, rng, out);
  return out;
}

// Runs `rounds` rounds from the empty configuration on the trial's own
// stream (derive_stream(seed, {trial})). The observer, if any, sees the
// configuration and outcome after every round.
template <RandomSource R, class Observer>
Configuration run_with(const ProcessParams& params, long long rounds, R& rng, Observer&& observe) {
  params.validate();
  Configuration config = Configuration::empty(params.n);
  RoundOutcome out;
  for (long long t = 0; t < rounds; ++t) {
    step(config, params, rng, out);
    observe(config, out);
  }
  return config;
}

Configuration run(const ProcessParams& params, long long rounds, std::uint64_t trial = 0);
Configuration run(const ProcessParams& params, long long rounds, std::uint64_t trial,
                  const std::function<void(const Configuration&, const RoundOutcome&)>& observer);

inline Rng trial_rng(const ProcessParams& params, std::uint64_t trial) {
  return Rng(derive_stream(params.seed, {trial}));
}

}  // namespace binsim
