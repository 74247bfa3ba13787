#pragma once

#include <cstdint>

namespace hideseek {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ splitmix64(value + 0x9E3779B97F4A7C15ULL));
}

// Counter-based stream: the n-th output is a pure function of (key, n), so a
// stream can be copied, replayed, or advanced without hidden state.
struct RngStream {
  std::uint64_t key = 0;
  std::uint64_t counter = 0;

  static constexpr RngStream for_env(std::uint64_t global_seed, std::uint64_t env_index) {
    return RngStream{hash_combine(global_seed, env_index), 0};
  }

  constexpr std::uint64_t next_u64() {
    return splitmix64(key + (counter++) * 0x9E3779B97F4A7C15ULL);
  }

  // Uniform in [0, 1) with 24 bits of resolution, exact in float.
  constexpr float uniform01() {
    return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
  }

  // Uniform in [-1, 1) on a 2^-23 grid.
  constexpr float uniform_pm1() {
    return static_cast<float>(next_u64() >> 40) * 0x1.0p-23f - 1.0f;
  }

  constexpr bool bernoulli(float p) { return uniform01() < p; }

  // Unbiased integer in [0, n) (Lemire's multiply-shift with rejection). n > 0.
  constexpr std::uint32_t below(std::uint32_t n) {
    std::uint64_t m = (next_u64() >> 32) * std::uint64_t{n};
    auto low = static_cast<std::uint32_t>(m);
    if (low < n) {
      const std::uint32_t threshold = (0u - n) % n;
      while (low < threshold) {
        m = (next_u64() >> 32) * std::uint64_t{n};
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  friend constexpr bool operator==(const RngStream&, const RngStream&) = default;
};

}  // namespace hideseek
