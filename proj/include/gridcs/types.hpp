#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace gridcs {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

/* Column-major complex matrix. Column access dominates everywhere
 * (sensing columns, per-column norms, support submatrices), so columns
 * are kept contiguous. */
struct CMat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  CVec data;

  CMat() = default;
  CMat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

  cplx& operator()(std::size_t i, std::size_t j) { return data[j * rows + i]; }
  const cplx& operator()(std::size_t i, std::size_t j) const {
    return data[j * rows + i];
  }
  cplx* col(std::size_t j) { return data.data() + j * rows; }
  const cplx* col(std::size_t j) const { return data.data() + j * rows; }
};

}  // namespace gridcs
