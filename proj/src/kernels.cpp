#include "gridcs/kernels.hpp"

#include <stdexcept>

#ifdef GRIDCS_HAVE_OPENMP
#include <omp.h>
#endif

namespace gridcs::kernels {

namespace serial {

void matvec(const CMat& a, const cplx* x, cplx* y) {
  const std::size_t m = a.rows;
  for (std::size_t i = 0; i < m; ++i) y[i] = cplx(0.0, 0.0);
  for (std::size_t j = 0; j < a.cols; ++j) {
    const cplx xj = x[j];
    if (xj == cplx(0.0, 0.0)) continue;
    const cplx* col = a.col(j);
    for (std::size_t i = 0; i < m; ++i) y[i] += col[i] * xj;
  }
}

void matvec_adj(const CMat& a, const cplx* y, cplx* z) {
  const std::size_t m = a.rows;
  for (std::size_t j = 0; j < a.cols; ++j) {
    const cplx* col = a.col(j);
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < m; ++i) acc += std::conj(col[i]) * y[i];
    z[j] = acc;
  }
}

void col_sqnorms(const CMat& a, double* out) {
  const std::size_t m = a.rows;
  for (std::size_t j = 0; j < a.cols; ++j) {
    const cplx* col = a.col(j);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += std::norm(col[i]);
    out[j] = acc;
  }
}

cplx vdot(const cplx* x, const cplx* y, std::size_t n) {
  cplx acc(0.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) acc += std::conj(x[i]) * y[i];
  return acc;
}

double sqnorm(const cplx* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::norm(x[i]);
  return acc;
}

void gram(const CMat& a, CMat& g) {
  const std::size_t n = a.cols;
  g = CMat(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i <= j; ++i) {
      const cplx v = vdot(a.col(i), a.col(j), a.rows);
      g(i, j) = v;
      g(j, i) = std::conj(v);
    }
  }
}

void gemm(const CMat& a, const CMat& b, CMat& c) {
  if (a.cols != b.rows) throw std::invalid_argument("gemm: inner dimensions differ");
  c = CMat(a.rows, b.cols);
  for (std::size_t j = 0; j < b.cols; ++j) matvec(a, b.col(j), c.col(j));
}

}  // namespace serial

#ifdef GRIDCS_HAVE_OPENMP

namespace omp {

/* Column-chunked accumulation with ordered combine: deterministic for a
 * fixed thread count. */
void matvec(const Exec& ex, const CMat& a, const cplx* x, cplx* y) {
  const std::size_t m = a.rows;
  const std::size_t n = a.cols;
  const int nt = ex.threads;
  std::vector<CVec> partial(nt, CVec(m, cplx(0.0, 0.0)));
#pragma omp parallel num_threads(nt)
  {
    const int t = omp_get_thread_num();
    const std::size_t lo = n * t / nt;
    const std::size_t hi = n * (t + 1) / nt;
    cplx* py = partial[t].data();
    for (std::size_t j = lo; j < hi; ++j) {
      const cplx xj = x[j];
      if (xj == cplx(0.0, 0.0)) continue;
      const cplx* col = a.col(j);
      for (std::size_t i = 0; i < m; ++i) py[i] += col[i] * xj;
    }
  }
  for (std::size_t i = 0; i < m; ++i) y[i] = partial[0][i];
  for (int t = 1; t < nt; ++t)
    for (std::size_t i = 0; i < m; ++i) y[i] += partial[t][i];
}

void matvec_adj(const Exec& ex, const CMat& a, const cplx* y, cplx* z) {
  const std::size_t m = a.rows;
  const long n = static_cast<long>(a.cols);
#pragma omp parallel for num_threads(ex.threads) schedule(static)
  for (long j = 0; j < n; ++j) {
    const cplx* col = a.col(j);
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < m; ++i) acc += std::conj(col[i]) * y[i];
    z[j] = acc;
  }
}

void col_sqnorms(const Exec& ex, const CMat& a, double* out) {
  const std::size_t m = a.rows;
  const long n = static_cast<long>(a.cols);
#pragma omp parallel for num_threads(ex.threads) schedule(static)
  for (long j = 0; j < n; ++j) {
    const cplx* col = a.col(j);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += std::norm(col[i]);
    out[j] = acc;
  }
}

cplx vdot(const Exec& ex, const cplx* x, const cplx* y, std::size_t n) {
  const int nt = ex.threads;
  CVec partial(nt, cplx(0.0, 0.0));
#pragma omp parallel num_threads(nt)
  {
    const int t = omp_get_thread_num();
    const std::size_t lo = n * t / nt;
    const std::size_t hi = n * (t + 1) / nt;
    cplx acc(0.0, 0.0);
    for (std::size_t i = lo; i < hi; ++i) acc += std::conj(x[i]) * y[i];
    partial[t] = acc;
  }
  cplx acc(0.0, 0.0);
  for (int t = 0; t < nt; ++t) acc += partial[t];
  return acc;
}

double sqnorm(const Exec& ex, const cplx* x, std::size_t n) {
  const int nt = ex.threads;
  RVec partial(nt, 0.0);
#pragma omp parallel num_threads(nt)
  {
    const int t = omp_get_thread_num();
    const std::size_t lo = n * t / nt;
    const std::size_t hi = n * (t + 1) / nt;
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += std::norm(x[i]);
    partial[t] = acc;
  }
  double acc = 0.0;
  for (int t = 0; t < nt; ++t) acc += partial[t];
  return acc;
}

void gram(const Exec& ex, const CMat& a, CMat& g) {
  const std::size_t n = a.cols;
  g = CMat(n, n);
  const long nl = static_cast<long>(n);
#pragma omp parallel for num_threads(ex.threads) schedule(dynamic)
  for (long j = 0; j < nl; ++j) {
    for (long i = 0; i <= j; ++i) {
      const cplx v = serial::vdot(a.col(i), a.col(j), a.rows);
      g(i, j) = v;
      g(j, i) = std::conj(v);
    }
  }
}

void gemm(const Exec& ex, const CMat& a, const CMat& b, CMat& c) {
  if (a.cols != b.rows) throw std::invalid_argument("gemm: inner dimensions differ");
  c = CMat(a.rows, b.cols);
  const long n = static_cast<long>(b.cols);
#pragma omp parallel for num_threads(ex.threads) schedule(static)
  for (long j = 0; j < n; ++j) serial::matvec(a, b.col(j), c.col(j));
}

}  // namespace omp

namespace {
inline bool parallel(const Exec& ex) { return ex.threads > 1; }
}  // namespace

#else

namespace omp {
void matvec(const Exec&, const CMat& a, const cplx* x, cplx* y) { serial::matvec(a, x, y); }
void matvec_adj(const Exec&, const CMat& a, const cplx* y, cplx* z) { serial::matvec_adj(a, y, z); }
void col_sqnorms(const Exec&, const CMat& a, double* out) { serial::col_sqnorms(a, out); }
cplx vdot(const Exec&, const cplx* x, const cplx* y, std::size_t n) { return serial::vdot(x, y, n); }
double sqnorm(const Exec&, const cplx* x, std::size_t n) { return serial::sqnorm(x, n); }
void gram(const Exec&, const CMat& a, CMat& g) { serial::gram(a, g); }
void gemm(const Exec&, const CMat& a, const CMat& b, CMat& c) { serial::gemm(a, b, c); }
}  // namespace omp

namespace {
inline bool parallel(const Exec&) { return false; }
}  // namespace

#endif

void matvec(const Exec& ex, const CMat& a, const CVec& x, CVec& y) {
  if (x.size() != a.cols) throw std::invalid_argument("matvec: size mismatch");
  y.resize(a.rows);
  if (parallel(ex)) omp::matvec(ex, a, x.data(), y.data());
  else serial::matvec(a, x.data(), y.data());
}

void matvec_adj(const Exec& ex, const CMat& a, const CVec& y, CVec& z) {
  if (y.size() != a.rows) throw std::invalid_argument("matvec_adj: size mismatch");
  z.resize(a.cols);
  if (parallel(ex)) omp::matvec_adj(ex, a, y.data(), z.data());
  else serial::matvec_adj(a, y.data(), z.data());
}

void col_sqnorms(const Exec& ex, const CMat& a, RVec& out) {
  out.resize(a.cols);
  if (parallel(ex)) omp::col_sqnorms(ex, a, out.data());
  else serial::col_sqnorms(a, out.data());
}

cplx vdot(const Exec& ex, const CVec& x, const CVec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("vdot: size mismatch");
  if (parallel(ex)) return omp::vdot(ex, x.data(), y.data(), x.size());
  return serial::vdot(x.data(), y.data(), x.size());
}

double sqnorm(const Exec& ex, const CVec& x) {
  if (parallel(ex)) return omp::sqnorm(ex, x.data(), x.size());
  return serial::sqnorm(x.data(), x.size());
}

void gram(const Exec& ex, const CMat& a, CMat& g) {
  if (parallel(ex)) omp::gram(ex, a, g);
  else serial::gram(a, g);
}

void gemm(const Exec& ex, const CMat& a, const CMat& b, CMat& c) {
  if (parallel(ex)) omp::gemm(ex, a, b, c);
  else serial::gemm(a, b, c);
}

}  // namespace gridcs::kernels
