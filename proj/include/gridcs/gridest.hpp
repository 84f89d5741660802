#pragma once

#include <cstddef>

#include "gridcs/model.hpp"
#include "gridcs/scvbi.hpp"
#include "gridcs/types.hpp"

namespace gridcs {

/* Everything the angle-refinement stage needs besides the grid itself:
 * the supported coefficients, the noise precision, the observation, and the
 * combined receive front-end used to rebuild sensing columns. */
struct GridLikelihoodContext {
  CVec x_hat_s;  // aligned with support.indices
  double kappa_hat = 1.0;
  CVec y;
  SupportEstimate support;
  CMat front;  // m x n_r
  std::size_t nx = 0, ny = 0;
};

GridLikelihoodContext make_grid_context(const ObservationModel& model, const CVec& mu,
                                        double kappa_hat, const SupportEstimate& support);

/* L(theta_S) = -kappa_hat * ||y - A_S(theta_S) x_S||^2; only the supported
 * columns are ever built. */
double grid_likelihood(const DynamicGrid& grid, const GridLikelihoodContext& ctx);

struct GridGradient {
  RVec d_az, d_el;  // aligned with support.indices
};

GridGradient grid_gradient(const DynamicGrid& grid, const GridLikelihoodContext& ctx);

/* b_theta Armijo-backtracked ascent steps on L over the supported azimuth
 * and elevation entries. Angles stay clamped within one cell of their
 * construction-time position; off-support entries are untouched. */
DynamicGrid grid_ascent(const DynamicGrid& grid, const GridLikelihoodContext& ctx,
                        std::size_t b_theta, bool* stalled = nullptr);

}  // namespace gridcs
