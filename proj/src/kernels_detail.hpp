#pragma once

#include <cmath>
#include <cstddef>

namespace cloze::kernels::detail {

inline double dot(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t k = 0; k < dim; ++k) s += a[k] * b[k];
  return s;
}

inline double norm(const double* a, std::size_t dim) { return std::sqrt(dot(a, a, dim)); }

}  // namespace cloze::kernels::detail
