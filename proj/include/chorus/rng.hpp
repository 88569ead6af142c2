#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace chorus {

// All randomness in a run is derived from one master seed through keyed
// streams. A stream is addressed by (seed, tag, id, tick), so any draw can
// be reproduced in isolation without replaying the run. No RNG object is
// ever shared or stored.

namespace stream {
// Purpose tags; arbitrary odd constants, fixed for the life of the format.
inline constexpr uint64_t kInit = 0x9d2c5680a9f13c01ULL;      // parameter init
inline constexpr uint64_t kScatter = 0x3bd523f16e0c8e2bULL;   // random grids
inline constexpr uint64_t kNoise = 0x7f4a7c15f39cc061ULL;     // Langevin noise
inline constexpr uint64_t kCodebook = 0x452821e638d01377ULL;  // codebook init
inline constexpr uint64_t kReseed = 0xbe5466cf34e90c6dULL;    // empty-cluster reseed
inline constexpr uint64_t kIntervene = 0xc0ac29b7c97c50ddULL; // symbol resampling
}  // namespace stream

inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  Rng(uint64_t seed, uint64_t tag, uint64_t id = 0, uint64_t tick = 0) {
    state_ = mix64(seed + 0x9e3779b97f4a7c15ULL);
    state_ = mix64(state_ ^ tag);
    state_ = mix64(state_ ^ (id + 0x632be59bd9b4e019ULL));
    state_ = mix64(state_ ^ (tick + 0x1d8e4e27c47d124fULL));
  }

  // splitmix64 step
  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    return mix64(z);
  }

  // [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // (0,1]
  double uniform_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; consumes exactly two draws per call, no cached spare.
  double gaussian() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Lemire reduction onto [0,n)
  uint64_t below(uint64_t n) {
    return uint64_t((__uint128_t(next_u64()) * __uint128_t(n)) >> 64);
  }

 private:
  uint64_t state_;
};

}  // namespace chorus
