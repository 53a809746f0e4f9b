// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include "supalign/kernels.hpp"

using namespace supalign;

namespace {

Mat gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  RngStream rng(seed);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  }
  return m;
}

template <Mat (*Fn)(const Mat&, const Mat&)>
void BM_corr(benchmark::State& state) {
  const Mat a = gaussian(state.range(0), 64, 1), b = gaussian(state.range(0), 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <Mat (*Fn)(const Mat&, std::vector<bool>&)>
void BM_standardize(benchmark::State& state) {
  const Mat a = gaussian(state.range(0), 64, 3);
  std::vector<bool> zero;
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, zero));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <void (*Fn)(RowMatF&, double, const RngStream&)>
void BM_fill(benchmark::State& state) {
  RowMatF z(state.range(0), 64);
  for (auto _ : state) {
    Fn(z, 0.1, RngStream(4));
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <Mat (*Fn)(const RowMatF&, const Mat&)>
void BM_relu_project(benchmark::State& state) {
  RowMatF z(state.range(0), 64);
  kernels::serial::sparse_uniform_fill(z, 0.1, RngStream(5));
  const Mat w = gaussian(64, 32, 6);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(z, w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <Mat (*Fn)(const Mat&, const Mat&, const Vec&, int)>
void BM_topk_encode(benchmark::State& state) {
  const Mat x = gaussian(state.range(0), 32, 7);
  const Mat w = gaussian(64, 32, 8);
  const Vec b = Vec::Zero(64);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x, w, b, 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_corr<kernels::serial::corr_matrix>)->Name("corr_matrix/serial")->Arg(20000)->Arg(100000);
BENCHMARK(BM_corr<kernels::parallel::corr_matrix>)->Name("corr_matrix/parallel")->Arg(20000)->Arg(100000);
BENCHMARK(BM_standardize<kernels::serial::standardize_columns>)->Name("standardize/serial")->Arg(100000);
BENCHMARK(BM_standardize<kernels::parallel::standardize_columns>)->Name("standardize/parallel")->Arg(100000);
BENCHMARK(BM_fill<kernels::serial::sparse_uniform_fill>)->Name("sparse_fill/serial")->Arg(100000);
BENCHMARK(BM_fill<kernels::parallel::sparse_uniform_fill>)->Name("sparse_fill/parallel")->Arg(100000);
BENCHMARK(BM_relu_project<kernels::serial::relu_project>)->Name("relu_project/serial")->Arg(100000);
BENCHMARK(BM_relu_project<kernels::parallel::relu_project>)->Name("relu_project/parallel")->Arg(100000);
BENCHMARK(BM_topk_encode<kernels::serial::topk_relu_encode>)->Name("topk_encode/serial")->Arg(100000);
BENCHMARK(BM_topk_encode<kernels::parallel::topk_relu_encode>)->Name("topk_encode/parallel")->Arg(100000);

BENCHMARK_MAIN();
