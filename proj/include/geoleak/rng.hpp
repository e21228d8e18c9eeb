#pragma once

#include <cmath>
#include <cstdint>

namespace geoleak::rng {

// splitmix64 finalizer. Used both as the per-draw output mix and to fold
// stream tags into the state, so any (seed, tag...) tuple opens an
// independent stream. Everything downstream derives from this one
// primitive, which keeps runs bit-reproducible across platforms (the
// standard library distributions are not).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// Well-known stream tags. Deriving per-entity streams from (seed, tag,
// indices) makes generation order-independent: entity k's draws do not
// depend on how many draws entity k-1 consumed.
enum StreamTag : std::uint64_t {
  kSplitDraw = 0x51,
  kGraphRewire = 0x52,
  kMobility = 0x53,
  kTrace = 0x54,
  kParamInit = 0x55,
  kPowerIteration = 0x56,
  kGeneric = 0x57,
};

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(mix64(seed)) {}

  static Stream of(std::uint64_t seed, std::uint64_t tag) {
    return Stream(combine(seed, tag));
  }
  static Stream of(std::uint64_t seed, std::uint64_t tag, std::uint64_t a) {
    return Stream(combine(combine(seed, tag), a));
  }
  static Stream of(std::uint64_t seed, std::uint64_t tag, std::uint64_t a,
                   std::uint64_t b) {
    return Stream(combine(combine(combine(seed, tag), a), b));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n). n must be > 0; bias is O(n / 2^64).
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller; consumes exactly two draws.
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Knuth's product method; fine for the small rates used here.
  int poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    int k = 0;
    double prod = 1.0;
    for (;;) {
      prod *= uniform01();
      if (prod <= limit) return k;
      ++k;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace geoleak::rng
