#include "gridcs/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace gridcs {

bool cholesky(CMat& a) {
  const std::size_t n = a.rows;
  if (a.cols != n) throw std::invalid_argument("cholesky: matrix not square");
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j).real();
    for (std::size_t k = 0; k < j; ++k) d -= std::norm(a(j, k));
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    a(j, j) = cplx(ljj, 0.0);
    for (std::size_t i = j + 1; i < n; ++i) {
      cplx s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * std::conj(a(j, k));
      a(i, j) = s / ljj;
    }
  }
  return true;
}

void cholesky_solve(const CMat& l, CVec& b) {
  const std::size_t n = l.rows;
  for (std::size_t i = 0; i < n; ++i) {  // forward: L z = b
    cplx s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * b[k];
    b[i] = s / l(i, i).real();
  }
  for (std::size_t i = n; i-- > 0;) {  // backward: L^H x = z
    cplx s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= std::conj(l(k, i)) * b[k];
    b[i] = s / l(i, i).real();
  }
}

HpdSolveInfo solve_hpd(CMat w, const CVec& b, CVec& x, double jitter_scale) {
  const std::size_t n = w.rows;
  if (b.size() != n) throw std::invalid_argument("solve_hpd: size mismatch");
  HpdSolveInfo info;
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += w(i, i).real();
  CMat l = w;
  if (!cholesky(l)) {
    info.jittered = true;
    info.jitter = jitter_scale * trace / static_cast<double>(n);
    l = w;
    for (std::size_t i = 0; i < n; ++i) l(i, i) += info.jitter;
    if (!cholesky(l)) throw std::runtime_error("solve_hpd: matrix not positive definite");
  }
  double pmin = l(0, 0).real(), pmax = pmin;
  for (std::size_t i = 1; i < n; ++i) {
    const double p = l(i, i).real();
    pmin = std::min(pmin, p);
    pmax = std::max(pmax, p);
  }
  info.cond_estimate = (pmax / pmin) * (pmax / pmin);
  x = b;
  cholesky_solve(l, x);
  return info;
}

}  // namespace gridcs
