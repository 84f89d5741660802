#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gridcs/kernels.hpp"
#include "gridcs/rng.hpp"
#include "gridcs/types.hpp"

namespace gridcs {

/* 2D angular grid: n1 azimuth points (fast index) by n2 elevation points.
 * Flat index q = i2*n1 + i1. Reference angles keep the construction-time
 * positions so refinement can be confined to one cell around them. */
struct DynamicGrid {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  RVec azimuth, elevation;    // current positions, size n1*n2
  RVec azimuth0, elevation0;  // construction-time positions
  double spacing_az = 0.0;
  double spacing_el = 0.0;
  std::size_t size() const { return n1 * n2; }
};

DynamicGrid uniform_grid(std::size_t n1, std::size_t n2, double el_lo, double el_hi);
DynamicGrid uniform_grid(std::size_t n1, std::size_t n2);  // elevation in [-pi/6, 0]

struct HybridCombiner {
  CMat analog;   // n_rf x n_r, block-diagonal, unit-modulus nonzeros
  CMat digital;  // n_rf x n_rf, orthonormal rows
  cplx pilot = cplx(1.0, 0.0);
};

/* Extra structure needed to rebuild sensing columns when grid angles move. */
struct MimoContext {
  HybridCombiner combiner;
  CMat front;     // pilot * digital * analog, m x n_r
  CMat steering;  // array response per grid point, n_r x q
  std::size_t nx = 0, ny = 0;
};

struct ObservationModel {
  CVec y;
  CMat sensing;  // m x n
  RVec col_sqnorms;
  DynamicGrid grid;
  std::optional<MimoContext> mimo;
  mutable double opnorm_sq_cache = -1.0;  // stale when negative

  std::size_t m() const { return sensing.rows; }
  std::size_t n() const { return sensing.cols; }
};

struct ChannelTruth {
  CVec gains;
  RVec az_true, el_true;
  CVec h;       // n_r-vector
  CVec x_true;  // n-vector, zero off support
  std::vector<std::size_t> support_true;
};

/* Array response of an nx-by-ny half-wavelength UPA; phase referenced at the
 * array center so the mean phase slope across elements is zero, which keeps
 * the likelihood-vs-angle landscape well conditioned for the refinement
 * stage. Entry (ix, iy) sits at flat index iy*nx + ix. */
CVec upa_steering(double az, double el, std::size_t nx, std::size_t ny);
void steering_derivative(double az, double el, std::size_t nx, std::size_t ny,
                         CVec& d_az, CVec& d_el);

HybridCombiner generate_combiner(std::size_t nr, std::size_t nrf, std::uint64_t seed);

ObservationModel build_sensing_matrix(const DynamicGrid& grid, const HybridCombiner& combiner,
                                      std::size_t nx, std::size_t ny,
                                      const kernels::Exec& ex = {});

/* Recomputes the named sensing columns (and cached norms) after their grid
 * angles changed; untouched columns are preserved bit for bit. */
void refresh_sensing_columns(ObservationModel& model, const std::vector<std::size_t>& cols,
                             const kernels::Exec& ex = {});

/* Wraps a generic sensing matrix so the solver runs on plain CS instances. */
ObservationModel model_from_matrix(CMat a, const kernels::Exec& ex = {});

ChannelTruth channel_from_support(const std::vector<std::size_t>& support,
                                  const DynamicGrid& grid, bool off_grid,
                                  std::size_t nx, std::size_t ny, Rng& rng);
ChannelTruth generate_channel(std::size_t k_paths, const DynamicGrid& grid, bool off_grid,
                              std::size_t nx, std::size_t ny, Rng& rng);

/* y = A x + w with per-entry complex noise variance 1/kappa.
 * kappa = +infinity means noise-free. */
CVec observe(const ObservationModel& model, const CVec& x_true, double kappa, Rng& rng);
/* y = front h + w for a MIMO model (observation generated from the true
 * channel rather than the gridded coefficients). */
CVec observe_channel(const ObservationModel& model, const CVec& h, double kappa, Rng& rng);

/* Power-iteration estimate of the squared spectral norm of the sensing
 * matrix (20 iterations, deterministic start); cached on the model. */
double opnorm_sq_estimate(const ObservationModel& model, const kernels::Exec& ex = {});

}  // namespace gridcs
