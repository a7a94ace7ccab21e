#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>

namespace dynsync {

// Counter-based generator: the SplitMix64 output function evaluated at
// key + counter * gamma. Output i depends only on (key, i), so substreams
// can be generated in any order, or in parallel, and still match a serial
// run bit for bit.
//
// Stream splitting: derive() folds a label into a key. Nested derives give
// hierarchical substreams, e.g.
//   derive(derive(seed, DOMAIN), k)  ->  independent stream per time block k.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), ctr_(counter) {}

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  // Stafford variant 13 finalizer, the SplitMix64 output mix
  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
  }

  static std::uint64_t derive(std::uint64_t key, std::uint64_t label) {
    return mix(key + kGamma * (label + 0x632BE59BD9B4E019ULL));
  }

  static std::uint64_t bits_of(double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, sizeof u);
    return u;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return ctr_; }

  std::uint64_t next_u64() { return mix(key_ + (++ctr_) * kGamma); }

  // [0, 1), 53-bit resolution
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1], safe as a log() argument
  double next_unit_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Box-Muller pair of independent N(0,1) draws; consumes two counters
  void next_gaussian_pair(double& z0, double& z1) {
    const double u1 = next_unit_pos();
    const double u2 = next_unit();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    z0 = rad * std::cos(ang);
    z1 = rad * std::sin(ang);
  }

  double next_gaussian() {
    double z0, z1;
    next_gaussian_pair(z0, z1);
    return z0;
  }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_;
};

}  // namespace dynsync
