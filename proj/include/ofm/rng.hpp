#pragma once

// Deterministic randomness. All stochastic code in this project draws from
// Rng so that a given seed produces the same stream on every platform:
// uniforms come from an explicit 53-bit mapping of mt19937_64 output and
// gaussians from Box-Muller, never from std:: distributions (whose algorithms
// are implementation-defined).

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ofm/common.hpp"

namespace ofm {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Stable combination of a run seed with a stream index (image id, layer id...)
// so parallel work items own independent generators regardless of schedule.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t s = seed;
  uint64_t h = splitmix64(s);
  s ^= 0x9E3779B97F4A7C15ull * (stream + 1);
  h ^= splitmix64(s);
  return h ? h : 0x1ull;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t raw() { return eng_(); }

  // [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // unbiased integer in [0, n)
  uint64_t below(uint64_t n) {
    require(n > 0, "Rng::below: n must be positive");
    uint64_t rem = (~uint64_t{0} - n + 1) % n;  // reject top partial block
    for (;;) {
      uint64_t r = eng_();
      if (r >= rem) return r % n;
    }
  }

  // standard normal via Box-Muller, second value cached
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  // Fisher-Yates over [0, n) index vector
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ofm
