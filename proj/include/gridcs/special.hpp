#pragma once

#include <algorithm>
#include <cmath>

namespace gridcs {

/* Digamma for positive arguments, recurrence plus asymptotic series.
 * Absolute error below 1e-12 for x >= 1e-6. */
double digamma(double x);

inline double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/* Probabilities are clamped away from {0,1} before log-odds arithmetic;
 * exact 0/1 handling is reserved for the few places that special-case it. */
constexpr double kProbClamp = 1e-12;

inline double clamp_prob(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

inline double xlogy(double x, double y) {
  return x == 0.0 ? 0.0 : x * std::log(y);
}

}  // namespace gridcs
