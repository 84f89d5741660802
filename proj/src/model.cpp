#include "gridcs/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gridcs {

namespace {

constexpr double kPi = std::numbers::pi;

void check_grid_args(std::size_t n1, std::size_t n2, double el_lo, double el_hi) {
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("grid: empty axis");
  if (!(el_lo < el_hi)) throw std::invalid_argument("grid: bad elevation range");
}

}  // namespace

DynamicGrid uniform_grid(std::size_t n1, std::size_t n2, double el_lo, double el_hi) {
  check_grid_args(n1, n2, el_lo, el_hi);
  DynamicGrid g;
  g.n1 = n1;
  g.n2 = n2;
  // Azimuth covers a 120-degree sector. The UPA response depends on azimuth
  // through sin(az), so a full-circle grid would duplicate every column
  // exactly, and near-endfire columns become unresolvable.
  g.spacing_az = (2.0 * kPi / 3.0) / static_cast<double>(n1);
  g.spacing_el = (el_hi - el_lo) / static_cast<double>(n2);
  g.azimuth.resize(n1 * n2);
  g.elevation.resize(n1 * n2);
  for (std::size_t i2 = 0; i2 < n2; ++i2) {
    double el = el_lo + (static_cast<double>(i2) + 0.5) * g.spacing_el;
    for (std::size_t i1 = 0; i1 < n1; ++i1) {
      std::size_t q = i2 * n1 + i1;
      g.azimuth[q] = -kPi / 3.0 + (static_cast<double>(i1) + 0.5) * g.spacing_az;
      g.elevation[q] = el;
    }
  }
  g.azimuth0 = g.azimuth;
  g.elevation0 = g.elevation;
  return g;
}

DynamicGrid uniform_grid(std::size_t n1, std::size_t n2) {
  return uniform_grid(n1, n2, -kPi / 6.0, 0.0);
}

CVec upa_steering(double az, double el, std::size_t nx, std::size_t ny) {
  if (!std::isfinite(az) || !std::isfinite(el))
    throw std::invalid_argument("upa_steering: non-finite angle");
  if (nx == 0 || ny == 0) throw std::invalid_argument("upa_steering: empty array");
  CVec a(nx * ny);
  double px = kPi * std::sin(az) * std::cos(el);
  double py = kPi * std::sin(el);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      double phase = px * (static_cast<double>(ix) - 0.5 * double(nx - 1)) + py * (static_cast<double>(iy) - 0.5 * double(ny - 1));
      a[iy * nx + ix] = cplx(std::cos(phase), std::sin(phase));
    }
  }
  return a;
}

void steering_derivative(double az, double el, std::size_t nx, std::size_t ny,
                         CVec& d_az, CVec& d_el) {
  CVec a = upa_steering(az, el, nx, ny);
  d_az.resize(nx * ny);
  d_el.resize(nx * ny);
  double gx_az = kPi * std::cos(az) * std::cos(el);
  double gx_el = -kPi * std::sin(az) * std::sin(el);
  double gy_el = kPi * std::cos(el);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      std::size_t r = iy * nx + ix;
      double dx = static_cast<double>(ix) - 0.5 * double(nx - 1);
      double dy = static_cast<double>(iy) - 0.5 * double(ny - 1);
      d_az[r] = cplx(0.0, 1.0) * (gx_az * dx) * a[r];
      d_el[r] = cplx(0.0, 1.0) * (gx_el * dx + gy_el * dy) * a[r];
    }
  }
}

HybridCombiner generate_combiner(std::size_t nr, std::size_t nrf, std::uint64_t seed) {
  if (nrf == 0 || nr == 0 || nr % nrf != 0)
    throw std::invalid_argument("combiner: n_rf must divide n_r");
  std::size_t block = nr / nrf;
  Rng rng(seed);

  HybridCombiner w;
  w.analog = CMat(nrf, nr);
  for (std::size_t rf = 0; rf < nrf; ++rf) {
    for (std::size_t k = 0; k < block; ++k) {
      double ph = 2.0 * kPi * rng.uniform();
      w.analog(rf, rf * block + k) = cplx(std::cos(ph), std::sin(ph));
    }
  }

  w.digital = CMat(nrf, nrf);
  for (std::size_t i = 0; i < nrf; ++i)
    for (std::size_t j = 0; j < nrf; ++j) w.digital(i, j) = rng.cgaussian(1.0);
  // Modified Gram-Schmidt on the rows.
  for (std::size_t i = 0; i < nrf; ++i) {
    for (std::size_t p = 0; p < i; ++p) {
      cplx proj(0.0, 0.0);
      for (std::size_t j = 0; j < nrf; ++j)
        proj += std::conj(w.digital(p, j)) * w.digital(i, j);
      for (std::size_t j = 0; j < nrf; ++j) w.digital(i, j) -= proj * w.digital(p, j);
    }
    double nrm = 0.0;
    for (std::size_t j = 0; j < nrf; ++j) nrm += std::norm(w.digital(i, j));
    nrm = std::sqrt(nrm);
    if (!(nrm > 1e-12)) throw std::runtime_error("combiner: degenerate digital stage");
    for (std::size_t j = 0; j < nrf; ++j) w.digital(i, j) /= nrm;
  }

  double ph = 2.0 * kPi * rng.uniform();
  w.pilot = cplx(std::cos(ph), std::sin(ph));
  return w;
}

ObservationModel build_sensing_matrix(const DynamicGrid& grid, const HybridCombiner& combiner,
                                      std::size_t nx, std::size_t ny, const kernels::Exec& ex) {
  std::size_t nr = nx * ny;
  if (combiner.analog.cols != nr)
    throw std::invalid_argument("build_sensing_matrix: combiner/array size mismatch");
  std::size_t m = combiner.digital.rows;
  std::size_t q = grid.size();

  MimoContext ctx;
  ctx.combiner = combiner;
  ctx.nx = nx;
  ctx.ny = ny;
  ctx.front = kernels::gemm(ex, combiner.digital, combiner.analog);
  for (auto& v : ctx.front.data) v *= combiner.pilot;

  ctx.steering = CMat(nr, q);
  for (std::size_t j = 0; j < q; ++j) {
    CVec a = upa_steering(grid.azimuth[j], grid.elevation[j], nx, ny);
    std::copy(a.begin(), a.end(), ctx.steering.col(j));
  }

  ObservationModel model;
  model.sensing = kernels::gemm(ex, ctx.front, ctx.steering);
  model.col_sqnorms = kernels::col_sqnorms(ex, model.sensing);
  model.grid = grid;
  model.mimo = std::move(ctx);
  model.y.assign(m, cplx(0.0, 0.0));
  return model;
}

void refresh_sensing_columns(ObservationModel& model, const std::vector<std::size_t>& cols,
                             const kernels::Exec& ex) {
  if (!model.mimo) throw std::invalid_argument("refresh_sensing_columns: no array context");
  MimoContext& ctx = *model.mimo;
  for (std::size_t q : cols) {
    if (q >= model.n()) throw std::invalid_argument("refresh_sensing_columns: column out of range");
    CVec a = upa_steering(model.grid.azimuth[q], model.grid.elevation[q], ctx.nx, ctx.ny);
    std::copy(a.begin(), a.end(), ctx.steering.col(q));
    CVec col = kernels::matvec(ex, ctx.front, a);
    std::copy(col.begin(), col.end(), model.sensing.col(q));
    model.col_sqnorms[q] = kernels::sqnorm(ex, col);
  }
  model.opnorm_sq_cache = -1.0;
}

ObservationModel model_from_matrix(CMat a, const kernels::Exec& ex) {
  ObservationModel model;
  model.sensing = std::move(a);
  model.col_sqnorms = kernels::col_sqnorms(ex, model.sensing);
  model.y.assign(model.m(), cplx(0.0, 0.0));
  return model;
}

ChannelTruth channel_from_support(const std::vector<std::size_t>& support,
                                  const DynamicGrid& grid, bool off_grid,
                                  std::size_t nx, std::size_t ny, Rng& rng) {
  ChannelTruth truth;
  truth.support_true = support;
  std::sort(truth.support_true.begin(), truth.support_true.end());
  for (std::size_t i = 1; i < truth.support_true.size(); ++i)
    if (truth.support_true[i] == truth.support_true[i - 1])
      throw std::invalid_argument("channel_from_support: duplicate index");
  if (!truth.support_true.empty() && truth.support_true.back() >= grid.size())
    throw std::invalid_argument("channel_from_support: index out of range");

  truth.h.assign(nx * ny, cplx(0.0, 0.0));
  truth.x_true.assign(grid.size(), cplx(0.0, 0.0));
  for (std::size_t q : truth.support_true) {
    double az = grid.azimuth[q];
    double el = grid.elevation[q];
    if (off_grid) {
      az += grid.spacing_az * (rng.uniform() - 0.5);
      el += grid.spacing_el * (rng.uniform() - 0.5);
    }
    cplx gain = rng.cgaussian(1.0);
    truth.gains.push_back(gain);
    truth.az_true.push_back(az);
    truth.el_true.push_back(el);
    truth.x_true[q] = gain;
    CVec a = upa_steering(az, el, nx, ny);
    for (std::size_t r = 0; r < a.size(); ++r) truth.h[r] += gain * a[r];
  }
  return truth;
}

ChannelTruth generate_channel(std::size_t k_paths, const DynamicGrid& grid, bool off_grid,
                              std::size_t nx, std::size_t ny, Rng& rng) {
  if (k_paths > grid.size()) throw std::invalid_argument("generate_channel: too many paths");
  std::vector<std::size_t> support;
  while (support.size() < k_paths) {
    std::size_t q = rng.integer(grid.size());
    if (std::find(support.begin(), support.end(), q) == support.end()) support.push_back(q);
  }
  return channel_from_support(support, grid, off_grid, nx, ny, rng);
}

namespace {

CVec add_observation_noise(CVec y, double kappa, Rng& rng) {
  if (!(kappa > 0.0)) throw std::invalid_argument("observe: noise precision must be positive");
  if (!std::isinf(kappa)) {
    double var = 1.0 / kappa;
    for (auto& v : y) v += rng.cgaussian(var);
  }
  return y;
}

}  // namespace

CVec observe(const ObservationModel& model, const CVec& x_true, double kappa, Rng& rng) {
  return add_observation_noise(kernels::matvec({}, model.sensing, x_true), kappa, rng);
}

CVec observe_channel(const ObservationModel& model, const CVec& h, double kappa, Rng& rng) {
  if (!model.mimo) throw std::invalid_argument("observe_channel: no array context");
  return add_observation_noise(kernels::matvec({}, model.mimo->front, h), kappa, rng);
}

double opnorm_sq_estimate(const ObservationModel& model, const kernels::Exec& ex) {
  if (model.opnorm_sq_cache >= 0.0) return model.opnorm_sq_cache;
  std::size_t n = model.n();
  if (n == 0 || model.m() == 0) return 0.0;
  Rng rng(0x5bd1e995u);
  CVec v(n);
  for (auto& e : v) e = rng.cgaussian(1.0);
  double nrm = std::sqrt(kernels::sqnorm(ex, v));
  for (auto& e : v) e /= nrm;
  double est = 0.0;
  for (int it = 0; it < 20; ++it) {
    CVec u = kernels::matvec(ex, model.sensing, v);
    CVec w = kernels::matvec_adj(ex, model.sensing, u);
    est = std::sqrt(kernels::sqnorm(ex, w));
    if (!(est > 0.0)) return model.opnorm_sq_cache = 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / est;
  }
  model.opnorm_sq_cache = est;
  return est;
}

}  // namespace gridcs
