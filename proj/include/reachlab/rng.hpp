#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "reachlab/common.hpp"

namespace reachlab {

// splitmix64, used to derive independent substream seeds from one run seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Named substream derivation: every source of randomness in a run is
// seeded as mix(run_seed, role, index), so runs replay exactly.
inline std::uint64_t substream_seed(std::uint64_t run_seed, std::string_view role,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(run_seed ^ fnv1a(role)) ^ index);
}

// mt19937_64 engine (portable sequence) with hand-rolled distributions;
// std:: distributions are implementation-defined and would not replay
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t uniform_int(std::uint64_t n) {
    // modulo bias is < 2^-53 for the small n used here
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  }

  // standard normal, Box-Muller with cached spare
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * kPi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace reachlab
