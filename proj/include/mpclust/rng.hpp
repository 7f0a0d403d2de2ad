#pragma once

#include <cmath>
#include <cstdint>

namespace mpclust {

// splitmix64: tiny, portable, and good enough for seeding and per-pair
// multipliers. All randomness in the library goes through these helpers so
// results are reproducible across platforms and standard libraries.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + b + (a << 6) + (a >> 2)));
}

// Uniform double in [0, 1) from 53 high bits.
inline double u01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Sequential generator with a splitmix64 state walk.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  double next_u01() { return u01(next_u64()); }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(next_u01() * static_cast<double>(n)) % n;
  }

  // Standard normal via Box-Muller; implemented here (not
  // std::normal_distribution) so streams are identical everywhere.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = next_u01();
    } while (u1 <= 0.0);
    double u2 = next_u01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mpclust
