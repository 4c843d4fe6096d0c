#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace ebst {

// Seeded random number generator built on splitmix64. The generator and the
// uniform/gaussian constructions are implemented here rather than through
// <random> distributions so that equal seeds give bit-identical streams on
// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the spare value is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so log(u1) is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::vector<double> gaussian_vec(std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = gaussian();
    return out;
  }

  // Index below n, used by shuffle and buffer draws. Modulo bias is
  // negligible at the sizes involved and keeps the draw count fixed.
  std::size_t index_below(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % n);
  }

  // Deterministic Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = index_below(i);
      std::swap(idx[i - 1], idx[j]);
    }
    return idx;
  }

  // Independent child stream identified by `stream`. Children with distinct
  // stream ids are decorrelated from the parent and from each other, which
  // keeps concurrent or reordered consumers reproducible.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t z = seed_ ^ (0xA24BAED4963EE407ULL * (stream + 1));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes small tags into a single stream id for Rng::fork.
inline std::uint64_t substream(std::uint64_t a, std::uint64_t b = 0,
                               std::uint64_t c = 0, std::uint64_t d = 0) {
  std::uint64_t h = a;
  for (std::uint64_t part : {b, c, d}) {
    h ^= part + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace ebst
