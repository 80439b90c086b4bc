#pragma once

#include <concepts>
#include <cstdint>
#include <initializer_list>

namespace binsim {

// splitmix64 finalizer: a bijective 64-bit mix. Used as the output stage of
// the generator and for folding seed material into stream ids.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Derives an independent stream id from a root seed and a path of words
// (e.g. scenario, n, lambda bits, trial index). Grid points and trials get
// their own streams, so each one is individually re-runnable.
constexpr std::uint64_t derive_stream(std::uint64_t root,
                                      std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(root + 0x9e3779b97f4a7c15ULL);
  for (std::uint64_t w : path) h = mix64(h ^ (w + 0x9e3779b97f4a7c15ULL));
  return h;
}

std::uint64_t double_bits(double x) noexcept;

// Counter-based generator (splitmix64): the state is a counter advanced by a
// fixed odd stride and each output is mix64 of it. Consumption order within a
// stream is part of the contract; the process module documents which draws
// happen when so trajectories are bit-reproducible.
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t stream) noexcept : state_(stream) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform double in [0, 1), 53 random bits.
  double next_double() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // p = 0 never fires, p = 1 always fires (next_double() < 1 exactly).
  bool bernoulli(double p) noexcept { return next_double() < p; }

  // Unbiased uniform integer in [0, bound) via multiply-shift rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t cutoff = (0u - bound) % bound;
      while (lo < cutoff) {
        m = static_cast<unsigned __int128>(next()) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Bin-id draws go through a named hook so tests can interpose a relabeling
  // source; for the real generator it is a plain uniform draw.
  std::uint64_t sample_bin(std::uint64_t n_bins) noexcept { return below(n_bins); }

 private:
  std::uint64_t state_;
};

// Anything the process functions need from a randomness source. Rng models
// this; tests substitute scripted or relabeling sources.
template <class R>
concept RandomSource = requires(R r, double p, std::uint64_t m) {
  { r.bernoulli(p) } -> std::convertible_to<bool>;
  { r.below(m) } -> std::convertible_to<std::uint64_t>;
  { r.sample_bin(m) } -> std::convertible_to<std::uint64_t>;
};

}  // namespace binsim
