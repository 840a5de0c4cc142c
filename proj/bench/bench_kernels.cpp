// Serial reference against the OpenMP kernels on teacher-student sized problems.

#include <benchmark/benchmark.h>

#include "lazyflow/compute.hpp"
#include "lazyflow/rng.hpp"

namespace {

using namespace lazyflow;
namespace cp = lazyflow::compute;

struct Problem {
  Matrix X, A, B, VA, VB, G;
  cp::Activation act;
  Problem(Eigen::Index n, Eigen::Index d, Eigen::Index m) {
    Engine rng(7);
    X = sample_sphere(n, d, rng);
    A = normal_matrix(m, d, 1.0, rng);
    B = normal_matrix(m, 1, 1.0, rng);
    VA = normal_matrix(m, d, 1.0, rng);
    VB = normal_matrix(m, 1, 1.0, rng);
    G = normal_matrix(n, 1, 1.0, rng);
  }
};

template <cp::Backend backend>
void BM_forward(benchmark::State& state) {
  const Problem p(state.range(0), 100, state.range(1));
  for (auto _ : state) {
    Matrix y = backend == cp::Backend::serial ? cp::serial::forward(p.X, p.A, p.B, p.act, 1.0)
                                              : cp::omp::forward(p.X, p.A, p.B, p.act, 1.0);
    benchmark::DoNotOptimize(y.data());
  }
}

template <cp::Backend backend>
void BM_jvp(benchmark::State& state) {
  const Problem p(state.range(0), 100, state.range(1));
  const cp::LayerCache c = cp::serial::cache(p.X, p.A, p.act);
  for (auto _ : state) {
    Matrix y = backend == cp::Backend::serial ? cp::serial::jvp(p.X, c, p.B, p.VA, p.VB, 1.0)
                                              : cp::omp::jvp(p.X, c, p.B, p.VA, p.VB, 1.0);
    benchmark::DoNotOptimize(y.data());
  }
}

template <cp::Backend backend>
void BM_vjp(benchmark::State& state) {
  const Problem p(state.range(0), 100, state.range(1));
  const cp::LayerCache c = cp::serial::cache(p.X, p.A, p.act);
  Matrix gA, gB;
  for (auto _ : state) {
    if (backend == cp::Backend::serial)
      cp::serial::vjp(p.X, c, p.B, p.G, 1.0, gA, gB);
    else
      cp::omp::vjp(p.X, c, p.B, p.G, 1.0, gA, gB);
    benchmark::DoNotOptimize(gA.data());
  }
}

template <cp::Backend backend>
void BM_gram(benchmark::State& state) {
  const Problem p(state.range(0), 10, state.range(1));
  const Vector b = p.B.col(0);
  Matrix Ka, Kb;
  for (auto _ : state) {
    if (backend == cp::Backend::serial)
      cp::serial::random_feature_gram(p.X, p.X, p.A, b, p.act, Ka, Kb);
    else
      cp::omp::random_feature_gram(p.X, p.X, p.A, b, p.act, Ka, Kb);
    benchmark::DoNotOptimize(Ka.data());
  }
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long n : {1000, 4000})
    for (long m : {50, 1024}) b->Args({n, m});
  b->Unit(benchmark::kMicrosecond);
}

void gram_sizes(benchmark::internal::Benchmark* b) {
  for (long n : {64, 500})
    for (long m : {1024, 4096}) b->Args({n, m});
  b->Unit(benchmark::kMicrosecond);
}

BENCHMARK(BM_forward<cp::Backend::serial>)->Apply(sizes);
BENCHMARK(BM_forward<cp::Backend::omp>)->Apply(sizes);
BENCHMARK(BM_jvp<cp::Backend::serial>)->Apply(sizes);
BENCHMARK(BM_jvp<cp::Backend::omp>)->Apply(sizes);
BENCHMARK(BM_vjp<cp::Backend::serial>)->Apply(sizes);
BENCHMARK(BM_vjp<cp::Backend::omp>)->Apply(sizes);
BENCHMARK(BM_gram<cp::Backend::serial>)->Apply(gram_sizes);
BENCHMARK(BM_gram<cp::Backend::omp>)->Apply(gram_sizes);

}  // namespace

BENCHMARK_MAIN();
