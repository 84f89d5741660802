#include "gridcs/special.hpp"

#include <stdexcept>

namespace gridcs {

double digamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("digamma: argument must be positive");
  double r = 0.0;
  while (x < 8.0) {
    r -= 1.0 / x;
    x += 1.0;
  }
  // Asymptotic expansion with Bernoulli terms through x^-14.
  const double x1 = 1.0 / x;
  const double x2 = x1 * x1;
  const double series = x2 * (1.0 / 12.0 +
                        x2 * (-1.0 / 120.0 +
                        x2 * (1.0 / 252.0 +
                        x2 * (-1.0 / 240.0 +
                        x2 * (1.0 / 132.0 +
                        x2 * (-691.0 / 32760.0 +
                        x2 * (1.0 / 12.0)))))));
  return r + std::log(x) - 0.5 * x1 - series;
}

}  // namespace gridcs
