// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "qcfe/errors.hpp"

namespace qcfe {

// All randomness in the library flows through this header. Distributions are
// implemented by hand (not via std:: distribution classes, whose algorithms
// are implementation-defined) so that a given seed produces the same stream
// on every platform and standard library.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Named seed derivation: child streams are keyed by (root, name, index) so
/// that parallel work units are reproducible independent of scheduling.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view name,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::uint64_t state = root ^ h;
  splitmix64_next(state);
  state ^= index * 0x9e3779b97f4a7c15ull + 0x243f6a8885a308d3ull;
  return splitmix64_next(state);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw ValidationError("uniform_int: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (deterministic, cached spare).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Draw an index from a cumulative weight table (strictly increasing,
  /// cdf.back() = total weight). Binary search on u * total.
  std::size_t categorical_cdf(std::span<const double> cdf) {
    if (cdf.empty()) throw ValidationError("categorical_cdf: empty table");
    const double u = uniform01() * cdf.back();
    std::size_t lo = 0, hi = cdf.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cdf[mid] <= u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qcfe
