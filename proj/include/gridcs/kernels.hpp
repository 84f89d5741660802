#pragma once

#include <cstddef>

#include "gridcs/types.hpp"

namespace gridcs::kernels {

/* Execution context for the data-parallel kernels. threads <= 1 selects the
 * serial reference implementation; larger counts run the OpenMP variants.
 * Results are bitwise-reproducible for a fixed thread count: reductions use
 * fixed chunking with ordered combination, and the per-element kernels
 * (adjoint products, column norms, Gram/GEMM, steering builds) are
 * bitwise-identical to the serial reference at any thread count. */
struct Exec {
  int threads = 1;
};

namespace serial {
void matvec(const CMat& a, const cplx* x, cplx* y);       // y = A x
void matvec_adj(const CMat& a, const cplx* y, cplx* z);   // z = A^H y
void col_sqnorms(const CMat& a, double* out);
cplx vdot(const cplx* x, const cplx* y, std::size_t n);   // x^H y
double sqnorm(const cplx* x, std::size_t n);
void gram(const CMat& a, CMat& g);                        // g = A^H A
void gemm(const CMat& a, const CMat& b, CMat& c);         // c = A B
}  // namespace serial

namespace omp {
void matvec(const Exec& ex, const CMat& a, const cplx* x, cplx* y);
void matvec_adj(const Exec& ex, const CMat& a, const cplx* y, cplx* z);
void col_sqnorms(const Exec& ex, const CMat& a, double* out);
cplx vdot(const Exec& ex, const cplx* x, const cplx* y, std::size_t n);
double sqnorm(const Exec& ex, const cplx* x, std::size_t n);
void gram(const Exec& ex, const CMat& a, CMat& g);
void gemm(const Exec& ex, const CMat& a, const CMat& b, CMat& c);
}  // namespace omp

void matvec(const Exec& ex, const CMat& a, const CVec& x, CVec& y);
void matvec_adj(const Exec& ex, const CMat& a, const CVec& y, CVec& z);
void col_sqnorms(const Exec& ex, const CMat& a, RVec& out);
cplx vdot(const Exec& ex, const CVec& x, const CVec& y);
double sqnorm(const Exec& ex, const CVec& x);
void gram(const Exec& ex, const CMat& a, CMat& g);
void gemm(const Exec& ex, const CMat& a, const CMat& b, CMat& c);

inline CVec matvec(const Exec& ex, const CMat& a, const CVec& x) {
  CVec y;
  matvec(ex, a, x, y);
  return y;
}

inline CVec matvec_adj(const Exec& ex, const CMat& a, const CVec& y) {
  CVec z;
  matvec_adj(ex, a, y, z);
  return z;
}

inline RVec col_sqnorms(const Exec& ex, const CMat& a) {
  RVec out;
  col_sqnorms(ex, a, out);
  return out;
}

inline CMat gram(const Exec& ex, const CMat& a) {
  CMat g;
  gram(ex, a, g);
  return g;
}

inline CMat gemm(const Exec& ex, const CMat& a, const CMat& b) {
  CMat c;
  gemm(ex, a, b, c);
  return c;
}

}  // namespace gridcs::kernels
