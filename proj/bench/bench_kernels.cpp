#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ltrisk/kernels.hpp"

namespace {

struct Problem {
  Eigen::MatrixXd x;
  Eigen::VectorXd beta;
  std::vector<double> w, z, out;
};

Problem make(std::size_t n, int p) {
  std::mt19937_64 rng(n * 31 + p);
  std::normal_distribution<double> g;
  Problem pr;
  pr.x.resize(n, p);
  for (Eigen::Index j = 0; j < pr.x.cols(); ++j)
    for (Eigen::Index i = 0; i < pr.x.rows(); ++i) pr.x(i, j) = g(rng);
  pr.beta = Eigen::VectorXd::NullaryExpr(p, [&] { return 0.1 * g(rng); });
  pr.w.resize(n);
  pr.z.resize(n);
  pr.out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    pr.w[i] = 0.05 + std::abs(g(rng));
    pr.z[i] = g(rng);
  }
  return pr;
}

template <bool Parallel>
void BM_crossprod(benchmark::State& st) {
  auto pr = make(st.range(0), static_cast<int>(st.range(1)));
  Eigen::MatrixXd gram;
  Eigen::VectorXd xtwz;
  for (auto _ : st) {
    if constexpr (Parallel)
      ltrisk::kernels::weighted_crossprod(pr.x, pr.w, pr.z, gram, xtwz);
    else
      ltrisk::reference::weighted_crossprod(pr.x, pr.w, pr.z, gram, xtwz);
    benchmark::DoNotOptimize(gram.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_linear_predictor(benchmark::State& st) {
  auto pr = make(st.range(0), static_cast<int>(st.range(1)));
  for (auto _ : st) {
    if constexpr (Parallel)
      ltrisk::kernels::linear_predictor(pr.x, pr.beta, {}, pr.out);
    else
      ltrisk::reference::linear_predictor(pr.x, pr.beta, {}, pr.out);
    benchmark::DoNotOptimize(pr.out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_weighted_sum(benchmark::State& st) {
  auto pr = make(st.range(0), 1);
  for (auto _ : st) {
    double s = Parallel ? ltrisk::kernels::weighted_sum(pr.z, pr.w)
                        : ltrisk::reference::weighted_sum(pr.z, pr.w);
    benchmark::DoNotOptimize(s);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long n : {10'000L, 100'000L, 1'000'000L})
    for (long p : {8L, 32L}) b->Args({n, p});
}

}  // namespace

BENCHMARK(BM_crossprod<false>)->Name("crossprod/serial")->Apply(sizes);
BENCHMARK(BM_crossprod<true>)->Name("crossprod/openmp")->Apply(sizes);
BENCHMARK(BM_linear_predictor<false>)->Name("linear_predictor/serial")->Apply(sizes);
BENCHMARK(BM_linear_predictor<true>)->Name("linear_predictor/openmp")->Apply(sizes);
BENCHMARK(BM_weighted_sum<false>)->Name("weighted_sum/serial")->Arg(100'000)->Arg(1'000'000);
BENCHMARK(BM_weighted_sum<true>)->Name("weighted_sum/openmp")->Arg(100'000)->Arg(1'000'000);

BENCHMARK_MAIN();
