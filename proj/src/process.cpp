#include "binsim/process.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

namespace binsim {

std::uint64_t double_bits(double x) noexcept {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(x));
  std::memcpy(&bits, &x, sizeof(bits));
  return bits;
}

long long delete_phase(Configuration& config) {
  long long deleted = 0;
  for (auto& load : config.loads) {
    if (load > 0) {
      --load;
      ++deleted;
    }
  }
  return deleted;
}

std::vector<int> rank_view(const Configuration& config) {
  std::vector<int> order(config.loads.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return config.loads[static_cast<size_t>(a)] > config.loads[static_cast<size_t>(b)];
  });
  return order;
}

Configuration run(const ProcessParams& params, long long rounds, std::uint64_t trial) {
  Rng rng = trial_rng(params, trial);
  return run_with(params, rounds, rng, [](const Configuration&, const RoundOutcome&) {});
}

Configuration run(const ProcessParams& params, long long rounds, std::uint64_t trial,
                  const std::function<void(const Configuration&, const RoundOutcome&)>& observer) {
  Rng rng = trial_rng(params, trial);
  return run_with(params, rounds, rng, [&](const Configuration& c, const RoundOutcome& o) {
    if (observer) observer(c, o);
  });
}

}  // namespace binsim
