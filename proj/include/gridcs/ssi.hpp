#pragma once

#include <cstddef>

#include "gridcs/prior.hpp"
#include "gridcs/types.hpp"

namespace gridcs {

/* Per-element activity probabilities exchanged between the solver core and
 * the structured-support stage. */
using BernoulliMessage = RVec;

/* Directional sum-product messages on the support grid. gamma_l/gamma_t are
 * forward predictive activity probabilities (carrying the chain prior),
 * gamma_r/gamma_b normalized backward likelihoods. Entries facing a missing
 * neighbor keep the uninformative boundary value; the stationary activity
 * enters once, as a unary factor at the origin site. */
struct MessageGrid {
  std::size_t n1 = 0, n2 = 0;
  RVec gamma_l, gamma_r, gamma_t, gamma_b;
  double boundary = 0.5;
};

/* Independent support carries no coupling: the extrinsic output is the
 * prior activity itself, whatever the input message. */
BernoulliMessage ssi_iid(const SupportPrior& prior);

/* Damped directional sweeps (left, right, top, bottom order; the first
 * round is undamped) of the four message recursions, then the extrinsic
 * output. On a chain-shaped grid one round is exact. */
BernoulliMessage ssi_markov2d(const BernoulliMessage& input_msg, const SupportPrior& prior,
                              std::size_t sweeps, double damping,
                              MessageGrid* grid_out = nullptr);

/* Exact extrinsic marginals by enumerating all support configurations
 * against the ancestral joint; cost guard n1*n2 <= 20. */
BernoulliMessage brute_force_marginals(const BernoulliMessage& input_msg,
                                       const SupportPrior& prior);

/* Dispatch on the prior kind; this is the entry the outer loop uses. */
BernoulliMessage ssi_extrinsic(const BernoulliMessage& input_msg, const SupportPrior& prior,
                               std::size_t sweeps, double damping);

}  // namespace gridcs
