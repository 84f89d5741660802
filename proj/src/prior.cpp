#include "gridcs/prior.hpp"

#include <cmath>
#include <stdexcept>

namespace gridcs {

PriorHyperParams default_hyperparams(std::size_t n) {
  if (n == 0) throw std::invalid_argument("default_hyperparams: empty model");
  PriorHyperParams h;
  h.a.assign(n, 1.0);
  h.b.assign(n, 1.0);
  h.a_bar.assign(n, 1.0);
  h.b_bar.assign(n, 1e-5);
  h.c = 1e-6;
  h.d = 1e-6;
  return h;
}

void validate_hyperparams(const PriorHyperParams& hyper, std::size_t n) {
  if (hyper.a.size() != n || hyper.b.size() != n || hyper.a_bar.size() != n ||
      hyper.b_bar.size() != n)
    throw std::invalid_argument("hyperparams: size mismatch");
  if (!(hyper.c > 0.0) || !(hyper.d > 0.0))
    throw std::invalid_argument("hyperparams: noise shape/rate must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(hyper.a[i] > 0.0) || !(hyper.b[i] > 0.0) || !(hyper.a_bar[i] > 0.0) ||
        !(hyper.b_bar[i] > 0.0))
      throw std::invalid_argument("hyperparams: Gamma parameters must be positive");
  }
}

std::size_t SupportPrior::size() const {
  return kind == Kind::IID ? lambda.size() : markov.n1 * markov.n2;
}

SupportPrior iid_support(RVec lambda) {
  for (double p : lambda)
    if (!(p >= 0.0) || !(p <= 1.0)) throw std::invalid_argument("iid_support: bad probability");
  SupportPrior prior;
  prior.kind = SupportPrior::Kind::IID;
  prior.lambda = std::move(lambda);
  return prior;
}

SupportPrior iid_support(std::size_t n, double lambda) {
  return iid_support(RVec(n, lambda));
}

SupportPrior markov2d_support(double p01_row, double p10_row, double p01_col, double p10_col,
                              std::size_t n1, std::size_t n2) {
  for (double p : {p01_row, p10_row, p01_col, p10_col})
    if (!(p >= 0.0) || !(p <= 1.0))
      throw std::invalid_argument("markov2d_support: transition probability outside [0,1]");
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("markov2d_support: empty grid");
  double den_r = p01_row + p10_row;
  double den_c = p01_col + p10_col;
  if (!(den_r > 0.0) || !(den_c > 0.0))
    throw std::invalid_argument("markov2d_support: degenerate chain");
  double lam_r = p01_row / den_r;
  double lam_c = p01_col / den_c;
  if (std::abs(lam_r - lam_c) > 1e-12)
    throw std::invalid_argument("markov2d_support: directions disagree on stationary activity");
  SupportPrior prior;
  prior.kind = SupportPrior::Kind::Markov2D;
  prior.markov = Markov2DParams{p01_row, p10_row, p01_col, p10_col, lam_r, n1, n2};
  return prior;
}

SupportPrior markov2d_from_sparsity(double lambda, std::size_t mean_run,
                                    std::size_t n1, std::size_t n2) {
  if (!(lambda > 0.0) || !(lambda < 1.0))
    throw std::invalid_argument("markov2d_from_sparsity: lambda outside (0,1)");
  if (mean_run == 0) throw std::invalid_argument("markov2d_from_sparsity: mean_run must be >= 1");
  double p10 = 1.0 / static_cast<double>(mean_run);
  double p01 = p10 * lambda / (1.0 - lambda);
  if (p01 > 1.0)
    throw std::invalid_argument("markov2d_from_sparsity: implied p01 exceeds 1");
  return markov2d_support(p01, p10, p01, p10, n1, n2);
}

void validate_support(const SupportPrior& prior, std::size_t n) {
  if (prior.size() != n) throw std::invalid_argument("support prior: size mismatch");
  if (prior.kind == SupportPrior::Kind::IID) {
    for (double p : prior.lambda)
      if (!(p >= 0.0) || !(p <= 1.0)) throw std::invalid_argument("support prior: bad probability");
  } else {
    const Markov2DParams& mk = prior.markov;
    double lam_r = mk.p01_row / (mk.p01_row + mk.p10_row);
    double lam_c = mk.p01_col / (mk.p01_col + mk.p10_col);
    if (std::abs(lam_r - mk.lambda) > 1e-12 || std::abs(lam_c - mk.lambda) > 1e-12)
      throw std::invalid_argument("support prior: stationarity violated");
  }
}

RVec prior_activity(const SupportPrior& prior) {
  if (prior.kind == SupportPrior::Kind::IID) return prior.lambda;
  return RVec(prior.size(), prior.markov.lambda);
}

namespace {

/* P(next = 1 | prev) for a two-state chain. */
inline double step_active(double p01, double p10, int prev) {
  return prev ? 1.0 - p10 : p01;
}

}  // namespace

std::vector<std::uint8_t> sample_support(const SupportPrior& prior, Rng& rng) {
  std::size_t n = prior.size();
  std::vector<std::uint8_t> s(n);
  if (prior.kind == SupportPrior::Kind::IID) {
    for (std::size_t i = 0; i < n; ++i) s[i] = rng.bernoulli(prior.lambda[i]) ? 1 : 0;
    return s;
  }
  const Markov2DParams& mk = prior.markov;
  for (std::size_t i2 = 0; i2 < mk.n2; ++i2) {
    for (std::size_t i1 = 0; i1 < mk.n1; ++i1) {
      std::size_t q = i2 * mk.n1 + i1;
      double p1;
      if (i1 == 0 && i2 == 0) {
        p1 = mk.lambda;
      } else if (i2 == 0) {
        p1 = step_active(mk.p01_row, mk.p10_row, s[q - 1]);
      } else if (i1 == 0) {
        p1 = step_active(mk.p01_col, mk.p10_col, s[q - mk.n1]);
      } else {
        double t1 = step_active(mk.p01_row, mk.p10_row, s[q - 1]) *
                    step_active(mk.p01_col, mk.p10_col, s[q - mk.n1]);
        double t0 = (1.0 - step_active(mk.p01_row, mk.p10_row, s[q - 1])) *
                    (1.0 - step_active(mk.p01_col, mk.p10_col, s[q - mk.n1]));
        p1 = t1 / (t1 + t0);
      }
      s[q] = rng.bernoulli(p1) ? 1 : 0;
    }
  }
  return s;
}

PriorSample sample_prior(const PriorHyperParams& hyper, const SupportPrior& prior, Rng& rng) {
  std::size_t n = prior.size();
  validate_hyperparams(hyper, n);
  PriorSample sample;
  sample.s = sample_support(prior, rng);
  sample.rho.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sample.rho[i] = sample.s[i] ? rng.gamma(hyper.a[i], hyper.b[i])
                                : rng.gamma(hyper.a_bar[i], hyper.b_bar[i]);
  }
  sample.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) sample.x[i] = rng.cgaussian(1.0 / sample.rho[i]);
  return sample;
}

}  // namespace gridcs
