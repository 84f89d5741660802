#pragma once

#include "gridcs/types.hpp"

namespace gridcs {

/* In-place lower Cholesky (A = L L^H) of a Hermitian positive definite
 * matrix. Returns false on a nonpositive pivot; the strict upper triangle
 * is left untouched. */
bool cholesky(CMat& a);

/* Solves L L^H x = b given the factor from cholesky(). */
void cholesky_solve(const CMat& l, CVec& b);

struct HpdSolveInfo {
  bool jittered = false;
  double jitter = 0.0;
  double cond_estimate = 1.0;  // squared pivot ratio, a cheap lower bound
};

/* Solves W x = b for Hermitian positive definite W (W is consumed).
 * On a failed factorization adds jitter_scale * trace(W)/n to the diagonal
 * once and retries; a second failure throws. */
HpdSolveInfo solve_hpd(CMat w, const CVec& b, CVec& x, double jitter_scale);

}  // namespace gridcs
