#include <cmath>
#include <limits>

#include "cloze/kernels.hpp"
#include "kernels_detail.hpp"

namespace cloze::kernels {

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  double r = sxy / std::sqrt(sxx * syy);
  if (r > 1.0) r = 1.0;
  if (r < -1.0) r = -1.0;
  return r;
}

namespace serial {

void row_norms(std::span<const double> data, std::size_t dim, std::span<double> out) {
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = detail::norm(data.data() + r * dim, dim);
}

void scale_rows(std::span<double> data, std::size_t dim, std::span<const double> norms) {
  for (std::size_t r = 0; r < norms.size(); ++r) {
    double* row = data.data() + r * dim;
    for (std::size_t k = 0; k < dim; ++k) row[k] /= norms[r];
  }
}

void batch_dot(std::span<const double> data, std::size_t dim, std::span<const RowPair> pairs,
               std::span<double> out) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out[i] = detail::dot(data.data() + pairs[i].a * dim, data.data() + pairs[i].b * dim, dim);
  }
}

std::vector<double> pearson_matrix(const std::vector<std::vector<double>>& columns) {
  const std::size_t k = columns.size();
  std::vector<double> out(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      const double r = pearson(columns[i], columns[j]);
      out[i * k + j] = r;
      out[j * k + i] = r;
    }
  }
  return out;
}

}  // namespace serial

void row_norms(std::span<const double> data, std::size_t dim, std::span<double> out, Exec exec) {
  exec == Exec::parallel ? omp::row_norms(data, dim, out) : serial::row_norms(data, dim, out);
}

void scale_rows(std::span<double> data, std::size_t dim, std::span<const double> norms,
                Exec exec) {
  exec == Exec::parallel ? omp::scale_rows(data, dim, norms) : serial::scale_rows(data, dim, norms);
}

void batch_dot(std::span<const double> data, std::size_t dim, std::span<const RowPair> pairs,
               std::span<double> out, Exec exec) {
  exec == Exec::parallel ? omp::batch_dot(data, dim, pairs, out)
                         : serial::batch_dot(data, dim, pairs, out);
}

std::vector<double> pearson_matrix(const std::vector<std::vector<double>>& columns, Exec exec) {
  return exec == Exec::parallel ? omp::pearson_matrix(columns) : serial::pearson_matrix(columns);
}

}  // namespace cloze::kernels
