#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "gridcs/types.hpp"

namespace gridcs {

/* Single PRNG used everywhere randomness is needed. All draws funnel
 * through this wrapper so a fixed seed pins every generated quantity. */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }

  std::uint64_t integer(std::uint64_t bound) {  // [0, bound)
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(gen_);
  }

  double gaussian() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }

  /* Circularly symmetric complex Gaussian with E|z|^2 = var. */
  cplx cgaussian(double var) {
    const double s = std::sqrt(0.5 * var);
    const double re = gaussian();
    const double im = gaussian();
    return {s * re, s * im};
  }

  double gamma(double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(gen_);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

/* splitmix64 step, used to derive independent per-cell seeds. */
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t s = splitmix64(base);
  for (std::uint64_t p : parts) s = splitmix64(s ^ p);
  return s;
}

}  // namespace gridcs
