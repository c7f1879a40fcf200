#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference and an
// OpenMP version; both evaluate each output element with the same arithmetic
// in the same order, so their results are bitwise identical.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cloze::kernels {

enum class Exec { serial, parallel };

struct RowPair {
  std::uint32_t a;
  std::uint32_t b;
};

/// L2 norm of each row of a row-major matrix with `dim` columns.
void row_norms(std::span<const double> data, std::size_t dim, std::span<double> out, Exec exec);

/// Divides each row by its entry in `norms`.
void scale_rows(std::span<double> data, std::size_t dim, std::span<const double> norms, Exec exec);

/// out[i] = <row(pairs[i].a), row(pairs[i].b)>.
void batch_dot(std::span<const double> data, std::size_t dim, std::span<const RowPair> pairs,
               std::span<double> out, Exec exec);

/// Pearson correlation between every pair of equally long columns, returned
/// row-major k x k. Entries involving a zero-variance column are NaN.
std::vector<double> pearson_matrix(const std::vector<std::vector<double>>& columns, Exec exec);

/// Pearson correlation of two equally long vectors; NaN if either has zero
/// variance or n < 2.
double pearson(std::span<const double> x, std::span<const double> y);

namespace serial {
void row_norms(std::span<const double> data, std::size_t dim, std::span<double> out);
void scale_rows(std::span<double> data, std::size_t dim, std::span<const double> norms);
void batch_dot(std::span<const double> data, std::size_t dim, std::span<const RowPair> pairs,
               std::span<double> out);
std::vector<double> pearson_matrix(const std::vector<std::vector<double>>& columns);
}  // namespace serial

namespace omp {
void row_norms(std::span<const double> data, std::size_t dim, std::span<double> out);
void scale_rows(std::span<double> data, std::size_t dim, std::span<const double> norms);
void batch_dot(std::span<const double> data, std::size_t dim, std::span<const RowPair> pairs,
               std::span<double> out);
std::vector<double> pearson_matrix(const std::vector<std::vector<double>>& columns);
int max_threads();
}  // namespace omp

}  // namespace cloze::kernels
