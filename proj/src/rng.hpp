#pragma once

// Deterministic random number streams.
//
// Every stochastic routine in the library takes an explicit 64-bit seed and
// derives independent sub-streams with derive(). Gaussian variates use a
// hand-rolled Box-Muller transform because std::normal_distribution is not
// guaranteed to produce identical sequences across standard library
// implementations, and reproducibility of seeded results is part of the
// contract here.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace fb {

// SplitMix64 step; used both as a stream-derivation hash and a seed mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stable derived seed for sub-stream k of a parent seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (k + 1));
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1): top 53 bits of the generator output.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller with a cached second variate.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 6.283185307179586476925286766559 * u2;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return rad * std::cos(ang);
  }

  // Uniform point on the sphere of radius r in R^n (Gaussian normalization).
  std::vector<double> sphere_point(int n, double r) {
    std::vector<double> t(n);
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (int i = 0; i < n; ++i) {
        t[i] = normal();
        norm2 += t[i] * t[i];
      }
    } while (norm2 == 0.0);
    double scale = r / std::sqrt(norm2);
    for (int i = 0; i < n; ++i) t[i] *= scale;
    return t;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fb
