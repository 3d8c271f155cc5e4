#pragma once

#include <cmath>
#include <cstdint>

namespace pkdyn {

// Counter-based splittable RNG. Every random draw in the library flows from a
// single run seed through stream/counter splits, so results never depend on
// scheduling. The core is splitmix64, which is well distributed for Monte
// Carlo at the sample counts used here.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : state_(seed * GOLDEN ^ MIX) {}

  // Derives an independent stream, e.g. one per sample index or per chain.
  SplitRng split(std::uint64_t stream) const {
    SplitRng r(0);
    r.state_ = mix(state_ ^ mix(stream + GOLDEN));
    return r;
  }

  std::uint64_t next_u64() {
    state_ += GOLDEN;
    return mix(state_);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  static constexpr std::uint64_t GOLDEN = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t MIX = 0xBF58476D1CE4E5B9ull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace pkdyn
