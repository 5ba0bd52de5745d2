#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace ratepred {

/// Identifier recorded in dataset manifests. Bump the suffix whenever the
/// sampling transforms below change, since traces depend on them bit-for-bit.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64/splitmix64-seed/u53-boxmuller/v1";

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a master seed and a stream index.
std::uint64_t stable_hash(std::uint64_t master, std::uint64_t index);

/// Seeded generator with portable transforms. std::mt19937_64 is fully
/// specified by the standard; the std distributions are not, so uniform and
/// normal sampling are implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; one draw consumes two uniforms.
  double normal();

  /// Uniform integer in [0, n), rejection sampled.
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ratepred
