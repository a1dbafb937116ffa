#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace deunet {

/// Deterministic random source. std::mt19937_64 output is fully specified by
/// the standard; the distribution mappings are implemented here so results do
/// not depend on the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Independent stream derived from (seed, stream), e.g. one per epoch.
  Rng(std::uint64_t seed, std::uint64_t stream)
      : gen_(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1))) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), rejection-sampled (no modulo bias).
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (consumes two uniforms per call).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double pick_sign() { return (next_u64() & 1) ? 1.0 : -1.0; }

  /// In-place Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace deunet
