#pragma once

// Deterministic randomness. Everything here is specified bit-for-bit so that
// suites and mock runs reproduce across compilers and languages: the engine
// is std::mt19937_64 (fully specified by the standard), seeds are derived with
// FNV-1a + splitmix64, and bounded draws use rejection sampling rather than
// the implementation-defined std distributions.

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace metalogic {

inline constexpr std::string_view kPrngAlgorithm =
    "mt19937_64;seed=splitmix64(fnv1a64);index=rejection;shuffle=fisher-yates";

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for a named sub-stream of `base`.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  /// Uniform in [0, 1) with 53 bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && unit() < p); }

  /// Fisher-Yates from the back.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace metalogic
