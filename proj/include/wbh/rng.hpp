// SPDX-License-Identifier: Apache-2.0
//
// Self-contained deterministic RNG. Distributions are implemented here
// rather than taken from <random> so that streams are bit-identical across
// standard libraries; the whole simulator is reproducible from a seed.

#pragma once

#include <complex>
#include <cmath>
#include <cstdint>

namespace wbh {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-trial seed as a pure function of (master seed, layout index, trial
// index); independent trials can run in any order or in parallel.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t layout,
                                 std::uint64_t trial) {
  std::uint64_t s = master;
  splitmix64(s);
  s ^= 0x632be59bd9b4e019ULL + layout;
  splitmix64(s);
  s ^= 0x9e6c63d0a2c4b2a7ULL + trial;
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // warm up so that near-zero seeds do not produce near-zero first draws
    splitmix64(state_);
    splitmix64(state_);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller; the spare value is cached
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // circularly symmetric complex normal, unit variance: E|z|^2 = 1
  std::complex<double> cnormal() {
    double re = normal();
    double im = normal();
    return {re * 0.7071067811865475244, im * 0.7071067811865475244};
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace wbh
