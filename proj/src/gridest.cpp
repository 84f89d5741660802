#include "gridcs/gridest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridcs/kernels.hpp"

namespace gridcs {

namespace {

void check_context(const DynamicGrid& grid, const GridLikelihoodContext& ctx) {
  if (ctx.support.indices.empty()) throw std::invalid_argument("grid context: empty support");
  if (ctx.x_hat_s.size() != ctx.support.indices.size())
    throw std::invalid_argument("grid context: coefficient count mismatch");
  if (!(ctx.kappa_hat > 0.0)) throw std::invalid_argument("grid context: kappa_hat <= 0");
  if (ctx.front.rows != ctx.y.size() || ctx.front.cols != ctx.nx * ctx.ny)
    throw std::invalid_argument("grid context: front-end shape mismatch");
  if (ctx.support.indices.back() >= grid.size())
    throw std::invalid_argument("grid context: support index out of range");
}

/* y - sum_k x_k * front a(theta_k). */
CVec residual(const DynamicGrid& grid, const GridLikelihoodContext& ctx) {
  CVec r = ctx.y;
  for (std::size_t k = 0; k < ctx.support.indices.size(); ++k) {
    std::size_t q = ctx.support.indices[k];
    CVec a = upa_steering(grid.azimuth[q], grid.elevation[q], ctx.nx, ctx.ny);
    CVec col = kernels::matvec({}, ctx.front, a);
    cplx xk = ctx.x_hat_s[k];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= xk * col[i];
  }
  return r;
}

}  // namespace

GridLikelihoodContext make_grid_context(const ObservationModel& model, const CVec& mu,
                                        double kappa_hat, const SupportEstimate& support) {
  if (!model.mimo) throw std::invalid_argument("make_grid_context: no array context");
  GridLikelihoodContext ctx;
  ctx.kappa_hat = kappa_hat;
  ctx.y = model.y;
  ctx.support = support;
  ctx.front = model.mimo->front;
  ctx.nx = model.mimo->nx;
  ctx.ny = model.mimo->ny;
  ctx.x_hat_s.reserve(support.indices.size());
  for (std::size_t q : support.indices) {
    if (q >= mu.size()) throw std::invalid_argument("make_grid_context: index out of range");
    ctx.x_hat_s.push_back(mu[q]);
  }
  return ctx;
}

double grid_likelihood(const DynamicGrid& grid, const GridLikelihoodContext& ctx) {
  check_context(grid, ctx);
  CVec r = residual(grid, ctx);
  return -ctx.kappa_hat * kernels::sqnorm({}, r);
}

GridGradient grid_gradient(const DynamicGrid& grid, const GridLikelihoodContext& ctx) {
  check_context(grid, ctx);
  CVec r = residual(grid, ctx);
  std::size_t k_count = ctx.support.indices.size();
  GridGradient grad;
  grad.d_az.resize(k_count);
  grad.d_el.resize(k_count);
  CVec d_az, d_el;
  for (std::size_t k = 0; k < k_count; ++k) {
    std::size_t q = ctx.support.indices[k];
    steering_derivative(grid.azimuth[q], grid.elevation[q], ctx.nx, ctx.ny, d_az, d_el);
    CVec col_az = kernels::matvec({}, ctx.front, d_az);
    CVec col_el = kernels::matvec({}, ctx.front, d_el);
    cplx xc = std::conj(ctx.x_hat_s[k]);
    grad.d_az[k] = 2.0 * ctx.kappa_hat * std::real(xc * kernels::vdot({}, col_az, r));
    grad.d_el[k] = 2.0 * ctx.kappa_hat * std::real(xc * kernels::vdot({}, col_el, r));
  }
  return grad;
}

DynamicGrid grid_ascent(const DynamicGrid& grid, const GridLikelihoodContext& ctx,
                        std::size_t b_theta, bool* stalled) {
  if (b_theta < 1) throw std::invalid_argument("grid_ascent: b_theta must be >= 1");
  check_context(grid, ctx);
  if (stalled) *stalled = false;

  DynamicGrid cur = grid;
  double l_cur = grid_likelihood(cur, ctx);
  std::size_t k_count = ctx.support.indices.size();

  for (std::size_t step = 0; step < b_theta; ++step) {
    GridGradient g = grid_gradient(cur, ctx);
    double g_inf = 0.0;
    double g_sq = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      g_inf = std::max({g_inf, std::abs(g.d_az[k]), std::abs(g.d_el[k])});
      g_sq += g.d_az[k] * g.d_az[k] + g.d_el[k] * g.d_el[k];
    }
    if (!(g_inf > 0.0)) break;

    double eps = 0.1 * std::min(grid.spacing_az, grid.spacing_el) / g_inf;
    bool accepted = false;
    DynamicGrid trial = cur;
    for (int h = 0; h <= 50; ++h) {
      for (std::size_t k = 0; k < k_count; ++k) {
        std::size_t q = ctx.support.indices[k];
        trial.azimuth[q] = std::clamp(cur.azimuth[q] + eps * g.d_az[k],
                                      grid.azimuth0[q] - grid.spacing_az,
                                      grid.azimuth0[q] + grid.spacing_az);
        trial.elevation[q] = std::clamp(cur.elevation[q] + eps * g.d_el[k],
                                        grid.elevation0[q] - grid.spacing_el,
                                        grid.elevation0[q] + grid.spacing_el);
      }
      double l_trial = grid_likelihood(trial, ctx);
      if (l_trial >= l_cur + 1e-4 * eps * g_sq) {
        accepted = true;
        l_cur = l_trial;
        break;
      }
      eps *= 0.5;
    }
    if (!accepted) {
      if (stalled) *stalled = true;
      break;
    }
    cur.azimuth = trial.azimuth;
    cur.elevation = trial.elevation;
  }
  return cur;
}

}  // namespace gridcs
