#pragma once

#include <cstdint>
#include <vector>

#include "gridcs/rng.hpp"
#include "gridcs/types.hpp"

namespace gridcs {

/* Three-layer sparse prior: per-element precision rho_n is Gamma(a_n, b_n)
 * when the element is active and Gamma(a_bar_n, b_bar_n) when inactive, so
 * inactive coefficients are pinned near zero. kappa is the Gamma(c, d) noise
 * precision. */
struct PriorHyperParams {
  RVec a, b;          // active-element Gamma shape/rate
  RVec a_bar, b_bar;  // inactive-element Gamma shape/rate
  double c = 1e-6;    // noise-precision shape
  double d = 1e-6;    // noise-precision rate
};

PriorHyperParams default_hyperparams(std::size_t n);
void validate_hyperparams(const PriorHyperParams& hyper, std::size_t n);

/* First-order 2D Markov support field, parameterized per direction by the
 * 0->1 and 1->0 transition probabilities. Both directions share the same
 * stationary activity rate lambda = p01/(p01+p10). */
struct Markov2DParams {
  double p01_row = 0.0, p10_row = 0.0;  // along the fast axis (i1)
  double p01_col = 0.0, p10_col = 0.0;  // along the slow axis (i2)
  double lambda = 0.0;
  std::size_t n1 = 0, n2 = 0;
};

struct SupportPrior {
  enum class Kind { IID, Markov2D };
  Kind kind = Kind::IID;
  RVec lambda;           // IID: per-element activity probability
  Markov2DParams markov; // Markov2D only
  std::size_t size() const;
};

SupportPrior iid_support(RVec lambda);
SupportPrior iid_support(std::size_t n, double lambda);
SupportPrior markov2d_support(double p01_row, double p10_row, double p01_col, double p10_col,
                              std::size_t n1, std::size_t n2);
/* Picks transitions so the stationary activity is lambda and the mean run of
 * consecutive active sites along each direction is mean_run. */
SupportPrior markov2d_from_sparsity(double lambda, std::size_t mean_run,
                                    std::size_t n1, std::size_t n2);
void validate_support(const SupportPrior& prior, std::size_t n);

/* Per-element activity probability (broadcast lambda for the Markov field). */
RVec prior_activity(const SupportPrior& prior);

/* Ancestral sample of the support field. Markov2D draws sites in row-major
 * order: the first site from the stationary law, first row/column from the
 * directional chains, and interior sites from the normalized product of the
 * left and top transition factors. */
std::vector<std::uint8_t> sample_support(const SupportPrior& prior, Rng& rng);

struct PriorSample {
  std::vector<std::uint8_t> s;
  RVec rho;
  CVec x;
};

PriorSample sample_prior(const PriorHyperParams& hyper, const SupportPrior& prior, Rng& rng);

}  // namespace gridcs
