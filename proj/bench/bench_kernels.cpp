// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cloze/kernels.hpp"

namespace k = cloze::kernels;

namespace {

constexpr std::size_t kDim = 300;

std::vector<double> random_matrix(std::size_t rows, std::size_t dim) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> n;
  std::vector<double> m(rows * dim);
  for (double& x : m) x = n(gen);
  return m;
}

std::vector<k::RowPair> random_pairs(std::size_t count, std::size_t rows) {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(rows - 1));
  std::vector<k::RowPair> p(count);
  for (auto& x : p) x = {pick(gen), pick(gen)};
  return p;
}

std::vector<std::vector<double>> random_columns(std::size_t k, std::size_t n) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> d;
  std::vector<std::vector<double>> cols(k, std::vector<double>(n));
  for (auto& c : cols)
    for (double& x : c) x = d(gen);
  return cols;
}

void RowNorms(benchmark::State& state, k::Exec exec) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto m = random_matrix(rows, kDim);
  std::vector<double> out(rows);
  for (auto _ : state) {
    k::row_norms(m, kDim, out, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

void BatchDot(benchmark::State& state, k::Exec exec) {
  const std::size_t rows = 20000;
  const auto m = random_matrix(rows, kDim);
  const auto pairs = random_pairs(static_cast<std::size_t>(state.range(0)), rows);
  std::vector<double> out(pairs.size());
  for (auto _ : state) {
    k::batch_dot(m, kDim, pairs, out, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}

void PearsonMatrix(benchmark::State& state, k::Exec exec) {
  const auto cols = random_columns(static_cast<std::size_t>(state.range(0)), 2000);
  for (auto _ : state) {
    auto r = k::pearson_matrix(cols, exec);
    benchmark::DoNotOptimize(r.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(RowNorms, serial, k::Exec::serial)->Arg(10000)->Arg(100000);
BENCHMARK_CAPTURE(RowNorms, omp, k::Exec::parallel)->Arg(10000)->Arg(100000);
BENCHMARK_CAPTURE(BatchDot, serial, k::Exec::serial)->Arg(10000)->Arg(200000);
BENCHMARK_CAPTURE(BatchDot, omp, k::Exec::parallel)->Arg(10000)->Arg(200000);
BENCHMARK_CAPTURE(PearsonMatrix, serial, k::Exec::serial)->Arg(8)->Arg(64);
BENCHMARK_CAPTURE(PearsonMatrix, omp, k::Exec::parallel)->Arg(8)->Arg(64);

BENCHMARK_MAIN();
