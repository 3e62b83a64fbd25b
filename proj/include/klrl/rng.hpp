#pragma once

#include <cstdint>
#include <vector>

namespace klrl {

// splitmix64 finalizer. Stable across platforms; the only bit-mixing
// primitive used in the project.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stable per-rollout seed derivation. Every random stream in a run is keyed
// by (global_seed, step, prompt_index, rollout_index), so serial and
// parallel rollout orders produce identical samples.
constexpr std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t step,
                                    std::uint64_t prompt_index, std::uint64_t rollout_index) {
  std::uint64_t h = mix64(global_seed ^ 0x243f6a8885a308d3ull);
  h = mix64(h ^ mix64(step ^ 0x13198a2e03707344ull));
  h = mix64(h ^ mix64(prompt_index ^ 0xa4093822299f31d0ull));
  h = mix64(h ^ mix64(rollout_index ^ 0x082efa98ec4e6c89ull));
  return h;
}

// Counter-based splitmix64 stream. Avoids std:: distributions on purpose:
// their output is implementation-defined and would break cross-platform
// bit-reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1) with 53 random bits
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  // uniform in (-half_width, +half_width)
  double centered_uniform(double half_width) { return (2.0 * uniform01() - 1.0) * half_width; }

  // index drawn from a probability vector (entries sum to ~1). Walks the
  // CDF; numerical leftover falls back to the last positive entry.
  int categorical(const std::vector<double>& probs) {
    const double u = uniform01();
    double c = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      c += probs[i];
      if (u < c) return static_cast<int>(i);
    }
    for (std::size_t i = probs.size(); i-- > 0;) {
      if (probs[i] > 0.0) return static_cast<int>(i);
    }
    return 0;
  }

 private:
  std::uint64_t state_;
};

}  // namespace klrl
