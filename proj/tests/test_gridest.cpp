#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>

#include "gridcs/gridest.hpp"
#include "gridcs/model.hpp"
#include "gridcs/rng.hpp"

using namespace gridcs;
using EMat = Eigen::MatrixXcd;
using EVec = Eigen::VectorXcd;

namespace {

constexpr double kPi = 3.14159265358979323846;

// closed-form array response entry, written independently of the library
cplx steering_entry(double az, double el, std::size_t ix, std::size_t iy, std::size_t nx,
                    std::size_t ny) {
  const double px = kPi * std::sin(az) * std::cos(el);
  const double py = kPi * std::sin(el);
  const double dx = double(ix) - 0.5 * double(nx - 1);
  const double dy = double(iy) - 0.5 * double(ny - 1);
  return std::polar(1.0, px * dx + py * dy);
}

EVec oracle_steering(double az, double el, std::size_t nx, std::size_t ny) {
  EVec a(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix) a(iy * nx + ix) = steering_entry(az, el, ix, iy, nx, ny);
  return a;
}

EMat to_eigen(const CMat& a) {
  EMat e(a.rows, a.cols);
  for (std::size_t j = 0; j < a.cols; ++j)
    for (std::size_t i = 0; i < a.rows; ++i) e(i, j) = a(i, j);
  return e;
}

EVec to_eigen(const CVec& x) {
  EVec e(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) e(i) = x[i];
  return e;
}

struct Setup {
  ObservationModel model;  // 4x4 UPA, 8 RF chains, 8x4 grid
};

Setup make_setup(std::uint64_t seed) {
  DynamicGrid grid = uniform_grid(8, 4);
  HybridCombiner comb = generate_combiner(16, 8, seed);
  Setup s{build_sensing_matrix(grid, comb, 4, 4)};
  s.model.y = CVec(s.model.m(), cplx(0.0, 0.0));
  return s;
}

// independent reconstruction of L through the closed-form steering entries
double oracle_likelihood(const DynamicGrid& grid, const GridLikelihoodContext& ctx) {
  EMat front = to_eigen(ctx.front);
  EVec r = to_eigen(ctx.y);
  for (std::size_t k = 0; k < ctx.support.indices.size(); ++k) {
    const std::size_t q = ctx.support.indices[k];
    r -= ctx.x_hat_s[k] * (front * oracle_steering(grid.azimuth[q], grid.elevation[q], ctx.nx, ctx.ny));
  }
  return -ctx.kappa_hat * r.squaredNorm();
}

}  // namespace

TEST_CASE("context construction copies the supported coefficients") {
  Setup s = make_setup(11);
  CVec mu(s.model.n(), cplx(0.0, 0.0));
  mu[2] = cplx(1.0, -2.0);
  mu[11] = cplx(0.5, 0.25);
  SupportEstimate sup;
  sup.indices = {2, 11};
  GridLikelihoodContext ctx = make_grid_context(s.model, mu, 3.0, sup);
  REQUIRE(ctx.x_hat_s.size() == 2);
  CHECK(ctx.x_hat_s[0] == mu[2]);
  CHECK(ctx.x_hat_s[1] == mu[11]);
  CHECK(ctx.kappa_hat == 3.0);
  CHECK(ctx.nx == 4);
  CHECK(ctx.ny == 4);
  CHECK(std::memcmp(ctx.front.data.data(), s.model.mimo->front.data.data(),
                    ctx.front.data.size() * sizeof(cplx)) == 0);

  // a model without array structure cannot refine angles
  CMat a(4, 6);
  a(0, 0) = 1.0;
  ObservationModel generic = model_from_matrix(std::move(a));
  CHECK_THROWS(make_grid_context(generic, CVec(6), 1.0, sup));

  SupportEstimate empty;
  CHECK_THROWS(grid_likelihood(s.model.grid, make_grid_context(s.model, mu, 1.0, empty)));
}

TEST_CASE("zero residual maximizes the likelihood at zero") {
  Setup s = make_setup(12);
  const std::size_t q = 11;
  const cplx gain(2.0, 1.0);
  EMat front = to_eigen(s.model.mimo->front);
  EVec y = gain * (front * oracle_steering(s.model.grid.azimuth[q], s.model.grid.elevation[q], 4, 4));
  for (std::size_t i = 0; i < s.model.m(); ++i) s.model.y[i] = y(i);

  CVec mu(s.model.n(), cplx(0.0, 0.0));
  mu[q] = gain;
  SupportEstimate sup;
  sup.indices = {q};
  GridLikelihoodContext ctx = make_grid_context(s.model, mu, 1e4, sup);

  const double l0 = grid_likelihood(s.model.grid, ctx);
  CHECK(l0 <= 0.0);
  CHECK(std::abs(l0) < 1e-12);

  DynamicGrid moved = s.model.grid;
  moved.azimuth[q] += 0.4 * moved.spacing_az;
  CHECK(grid_likelihood(moved, ctx) < -1e-3);
}

TEST_CASE("likelihood scales linearly in the precision") {
  Setup s = make_setup(13);
  Rng rng(14);
  for (auto& v : s.model.y) v = rng.cgaussian(1.0);
  CVec mu(s.model.n(), cplx(0.0, 0.0));
  mu[5] = cplx(0.7, -0.1);
  SupportEstimate sup;
  sup.indices = {5};
  GridLikelihoodContext c1 = make_grid_context(s.model, mu, 1.0, sup);
  GridLikelihoodContext c2 = make_grid_context(s.model, mu, 2.0, sup);
  const double l1 = grid_likelihood(s.model.grid, c1);
  const double l2 = grid_likelihood(s.model.grid, c2);
  CHECK(l1 < 0.0);
  CHECK(l2 == doctest::Approx(2.0 * l1).epsilon(1e-14));
}

TEST_CASE("likelihood agrees with an independent dense reconstruction") {
  Setup s = make_setup(15);
  Rng rng(16);
  for (auto& v : s.model.y) v = rng.cgaussian(1.0);
  CVec mu(s.model.n(), cplx(0.0, 0.0));
  mu[5] = cplx(1.2, -0.5);
  mu[18] = cplx(-0.7, 0.9);
  SupportEstimate sup;
  sup.indices = {5, 18};
  GridLikelihoodContext ctx = make_grid_context(s.model, mu, 2.5, sup);

  DynamicGrid grid = s.model.grid;
  grid.azimuth[5] += 0.37 * grid.spacing_az;
  grid.elevation[18] -= 0.21 * grid.spacing_el;

  const double got = grid_likelihood(grid, ctx);
  const double want = oracle_likelihood(grid, ctx);
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("gradient matches central finite differences") {
  Setup s = make_setup(17);
  Rng rng(18);
  for (auto& v : s.model.y) v = rng.cgaussian(1.0);
  CVec mu(s.model.n(), cplx(0.0, 0.0));
  mu[5] = cplx(1.2, -0.5);
  mu[18] = cplx(-0.7, 0.9);
  SupportEstimate sup;
  sup.indices = {5, 18};
  GridLikelihoodContext ctx = make_grid_context(s.model, mu, 1.0, sup);

  DynamicGrid grid = s.model.grid;
  grid.azimuth[5] += 0.13 * grid.spacing_az;
  grid.elevation[5] -= 0.4 * grid.spacing_el;
  grid.azimuth[18] -= 0.29 * grid.spacing_az;

  GridGradient g = grid_gradient(grid, ctx);
  const double h = 1e-5;
  for (std::size_t k = 0; k < 2; ++k) {
    const std::size_t q = sup.indices[k];
    DynamicGrid gp = grid, gm = grid;
    gp.azimuth[q] += h;
    gm.azimuth[q] -= h;
    const double fd_az = (grid_likelihood(gp, ctx) - grid_likelihood(gm, ctx)) / (2.0 * h);
    CHECK(std::abs(g.d_az[k] - fd_az) < 1e-6 * std::max(1.0, std::abs(g.d_az[k])));
    gp = grid;
    gm = grid;
    gp.elevation[q] += h;
    gm.elevation[q] -= h;
    const double fd_el = (grid_likelihood(gp, ctx) - grid_likelihood(gm, ctx)) / (2.0 * h);
    CHECK(std::abs(g.d_el[k] - fd_el) < 1e-6 * std::max(1.0, std::abs(g.d_el[k])));
  }
}

TEST_CASE("an exact fit is a stationary point") {
  Setup s = make_setup(19);
  const std::size_t q = 20;
  const cplx gain(1.0, -3.0);
  EMat front = to_eigen(s.model.mimo->front);
  EVec y = gain * (front * oracle_steering(s.model.grid.azimuth[q], s.model.grid.elevation[q], 4, 4));
  for (std::size_t i = 0; i < s.model.m(); ++i) s.model.y[i] = y(i);
  CVec mu(s.model.n(), cplx(0.0, 0.0));
  mu[q] = gain;
  SupportEstimate sup;
  sup.indices = {q};
  GridLikelihoodContext ctx = make_grid_context(s.model, mu, 1.0, sup);
  GridGradient g = grid_gradient(s.model.grid, ctx);
  CHECK(std::abs(g.d_az[0]) < 1e-9);
  CHECK(std::abs(g.d_el[0]) < 1e-9);

  // ascent from the optimum stays put
  DynamicGrid out = grid_ascent(s.model.grid, ctx, 5);
  CHECK(std::abs(out.azimuth[q] - s.model.grid.azimuth[q]) < 1e-12);
  CHECK(std::abs(out.elevation[q] - s.model.grid.elevation[q]) < 1e-12);
}

TEST_CASE("ascent recovers a single off-grid path") {
  Setup s = make_setup(20);
  const std::size_t q = 11;
  const double az_true = s.model.grid.azimuth0[q] + 0.3 * s.model.grid.spacing_az;
  const double el_true = s.model.grid.elevation0[q] - 0.2 * s.model.grid.spacing_el;
  const cplx gain(2.0, 1.0);
  EMat front = to_eigen(s.model.mimo->front);
  EVec y = gain * (front * oracle_steering(az_true, el_true, 4, 4));
  for (std::size_t i = 0; i < s.model.m(); ++i) s.model.y[i] = y(i);

  CVec mu(s.model.n(), cplx(0.0, 0.0));
  mu[q] = gain;
  SupportEstimate sup;
  sup.indices = {q};
  GridLikelihoodContext ctx = make_grid_context(s.model, mu, 1e4, sup);

  DynamicGrid out = grid_ascent(s.model.grid, ctx, 120);
  CHECK(std::abs(out.azimuth[q] - az_true) < 1e-3);
  CHECK(std::abs(out.elevation[q] - el_true) < 1e-3);

  // the scan oracle agrees that the truth is the in-cell optimum
  double best_az = 0.0, best_l = -1e300;
  for (int t = -100; t <= 100; ++t) {
    DynamicGrid g = s.model.grid;
    g.azimuth[q] = az_true + 0.01 * t * s.model.grid.spacing_az;
    g.elevation[q] = el_true;
    const double l = grid_likelihood(g, ctx);
    if (l > best_l) {
      best_l = l;
      best_az = g.azimuth[q];
    }
  }
  CHECK(std::abs(best_az - az_true) < 0.011 * s.model.grid.spacing_az);
}

TEST_CASE("each accepted ascent step raises the likelihood") {
  Setup s = make_setup(21);
  const std::size_t q = 11;
  const double az_true = s.model.grid.azimuth0[q] + 0.45 * s.model.grid.spacing_az;
  const double el_true = s.model.grid.elevation0[q] + 0.35 * s.model.grid.spacing_el;
  EMat front = to_eigen(s.model.mimo->front);
  EVec y = cplx(1.0, 0.5) * (front * oracle_steering(az_true, el_true, 4, 4));
  for (std::size_t i = 0; i < s.model.m(); ++i) s.model.y[i] = y(i);
  CVec mu(s.model.n(), cplx(0.0, 0.0));
  mu[q] = cplx(1.0, 0.5);
  SupportEstimate sup;
  sup.indices = {q};
  GridLikelihoodContext ctx = make_grid_context(s.model, mu, 100.0, sup);

  DynamicGrid grid = s.model.grid;
  double l_prev = grid_likelihood(grid, ctx);
  for (int t = 0; t < 30; ++t) {
    grid = grid_ascent(grid, ctx, 1);
    const double l = grid_likelihood(grid, ctx);
    CHECK(l >= l_prev - 1e-12 * std::abs(l_prev));
    l_prev = l;
  }
}

TEST_CASE("refined angles stay clamped to one cell") {
  Setup s = make_setup(22);
  const std::size_t q = 11;
  // plant the source two cells away so the unclamped optimum is out of reach
  const double az_true = s.model.grid.azimuth0[q] + 2.0 * s.model.grid.spacing_az;
  EMat front = to_eigen(s.model.mimo->front);
  EVec y = cplx(3.0, 0.0) *
           (front * oracle_steering(az_true, s.model.grid.elevation0[q], 4, 4));
  for (std::size_t i = 0; i < s.model.m(); ++i) s.model.y[i] = y(i);
  CVec mu(s.model.n(), cplx(0.0, 0.0));
  mu[q] = cplx(3.0, 0.0);
  SupportEstimate sup;
  sup.indices = {q};
  GridLikelihoodContext ctx = make_grid_context(s.model, mu, 10.0, sup);

  DynamicGrid out = grid_ascent(s.model.grid, ctx, 200);
  CHECK(out.azimuth[q] <= s.model.grid.azimuth0[q] + s.model.grid.spacing_az + 1e-12);
  CHECK(out.azimuth[q] >= s.model.grid.azimuth0[q] - s.model.grid.spacing_az - 1e-12);
  CHECK(std::abs(out.elevation[q] - s.model.grid.elevation0[q]) <=
        s.model.grid.spacing_el + 1e-12);
}

TEST_CASE("off-support grid entries are untouched") {
  Setup s = make_setup(23);
  Rng rng(24);
  for (auto& v : s.model.y) v = rng.cgaussian(1.0);
  CVec mu(s.model.n(), cplx(0.0, 0.0));
  mu[7] = cplx(0.9, 0.4);
  SupportEstimate sup;
  sup.indices = {7};
  GridLikelihoodContext ctx = make_grid_context(s.model, mu, 5.0, sup);
  DynamicGrid out = grid_ascent(s.model.grid, ctx, 25);
  for (std::size_t i = 0; i < s.model.grid.size(); ++i) {
    if (i == 7) continue;
    CHECK(out.azimuth[i] == s.model.grid.azimuth[i]);
    CHECK(out.elevation[i] == s.model.grid.elevation[i]);
  }
}

TEST_CASE("likelihood is invariant to support slot ordering") {
  Setup s = make_setup(25);
  Rng rng(26);
  for (auto& v : s.model.y) v = rng.cgaussian(1.0);
  const double az_a = 0.3, el_a = -0.2, az_b = -0.5, el_b = -0.4;
  const cplx ga(1.0, -1.0), gb(0.5, 2.0);

  SupportEstimate sup;
  sup.indices = {2, 11};

  DynamicGrid g1 = s.model.grid;
  g1.azimuth[2] = az_a;
  g1.elevation[2] = el_a;
  g1.azimuth[11] = az_b;
  g1.elevation[11] = el_b;
  CVec mu1(s.model.n(), cplx(0.0, 0.0));
  mu1[2] = ga;
  mu1[11] = gb;

  DynamicGrid g2 = s.model.grid;
  g2.azimuth[2] = az_b;
  g2.elevation[2] = el_b;
  g2.azimuth[11] = az_a;
  g2.elevation[11] = el_a;
  CVec mu2(s.model.n(), cplx(0.0, 0.0));
  mu2[2] = gb;
  mu2[11] = ga;

  const double l1 = grid_likelihood(g1, make_grid_context(s.model, mu1, 2.0, sup));
  const double l2 = grid_likelihood(g2, make_grid_context(s.model, mu2, 2.0, sup));
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
}
