#include <omp.h>

#include <cstdint>

#include "cloze/kernels.hpp"
#include "kernels_detail.hpp"

namespace cloze::kernels::omp {

int max_threads() { return omp_get_max_threads(); }

void row_norms(std::span<const double> data, std::size_t dim, std::span<double> out) {
  const auto rows = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    out[r] = detail::norm(data.data() + r * dim, dim);
  }
}

void scale_rows(std::span<double> data, std::size_t dim, std::span<const double> norms) {
  const auto rows = static_cast<std::int64_t>(norms.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    double* row = data.data() + r * dim;
    for (std::size_t k = 0; k < dim; ++k) row[k] /= norms[r];
  }
}

void batch_dot(std::span<const double> data, std::size_t dim, std::span<const RowPair> pairs,
               std::span<double> out) {
  const auto n = static_cast<std::int64_t>(pairs.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = detail::dot(data.data() + pairs[i].a * dim, data.data() + pairs[i].b * dim, dim);
  }
}

std::vector<double> pearson_matrix(const std::vector<std::vector<double>>& columns) {
  const auto k = static_cast<std::int64_t>(columns.size());
  std::vector<double> out(k * k);
  // Upper triangle flattened so the work splits evenly.
  const std::int64_t cells = k * (k + 1) / 2;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t c = 0; c < cells; ++c) {
    std::int64_t i = 0;
    std::int64_t rem = c;
    while (rem >= k - i) {
      rem -= k - i;
      ++i;
    }
    const std::int64_t j = i + rem;
    const double r = pearson(columns[i], columns[j]);
    out[i * k + j] = r;
    out[j * k + i] = r;
  }
  return out;
}

}  // namespace cloze::kernels::omp
