#pragma once

#include <cstdint>
#include <random>

namespace arms {

/// Seeded uniform stream shared by all samplers.
///
/// Every draw is a 53-bit uniform on the open interval (0, 1), so log(u) is
/// always finite and a zero-density candidate can never pass a ratio test.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    engine_.seed(seq);
  }

  double uniform() {
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    return (static_cast<double>(engine_() >> 11) + 0.5) * scale;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace arms
