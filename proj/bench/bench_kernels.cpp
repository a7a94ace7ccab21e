// OpenMP kernels against their single-threaded dense references

#include <benchmark/benchmark.h>

#include "dynsync/estimators.hpp"
#include "dynsync/parallel.hpp"
#include "dynsync/path_basis.hpp"
#include "dynsync/reference.hpp"
#include "dynsync/signal.hpp"
#include "dynsync/synthgen.hpp"

namespace {

using namespace dynsync;

struct Fixture {
  StackedSignal truth;
  MeasurementStack A;
  PathSpectralBasis basis;

  Fixture(int n, int T, double sigma)
      : truth(generate_smooth_truth({n, T, 1.0}, 99)),
        A(generate_agn(truth, {sigma}, 99, 1)),
        basis(T) {}
};

Fixture& fixture() {
  static Fixture f(40, 60, 2.0);
  return f;
}

void bm_projector_blockwise(benchmark::State& state) {
  Fixture& f = fixture();
  const int threads = int(state.range(0));
  SmoothProjector P(f.basis, 8, f.A.n());
  MatrixXcd X = f.A.stacked();
  for (auto _ : state) {
    MatrixXcd Y = P.apply(X, threads);
    benchmark::DoNotOptimize(Y.data());
  }
}

void bm_projector_dense_reference(benchmark::State& state) {
  Fixture& f = fixture();
  MatrixXcd X = f.A.stacked();
  for (auto _ : state) {
    MatrixXcd Y = reference::apply_projector_dense(f.basis, 8, f.A.n(), X);
    benchmark::DoNotOptimize(Y.data());
  }
}

void bm_block_sync_power(benchmark::State& state) {
  Fixture& f = fixture();
  const int threads = int(state.range(0));
  for (auto _ : state) {
    StackedSignal g = estimate_naive_spectral(f.A, threads);
    benchmark::DoNotOptimize(&g);
  }
}

void bm_block_sync_dense_reference(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) {
    StackedSignal g = reference::naive_spectral_dense(f.A);
    benchmark::DoNotOptimize(&g);
  }
}

void bm_generate_agn(benchmark::State& state) {
  Fixture& f = fixture();
  const int threads = int(state.range(0));
  for (auto _ : state) {
    MeasurementStack A = generate_agn(f.truth, {2.0}, 7, threads);
    benchmark::DoNotOptimize(&A);
  }
}

BENCHMARK(bm_projector_blockwise)->Arg(1)->Arg(hardware_threads());
BENCHMARK(bm_projector_dense_reference);
BENCHMARK(bm_block_sync_power)->Arg(1)->Arg(hardware_threads());
BENCHMARK(bm_block_sync_dense_reference);
BENCHMARK(bm_generate_agn)->Arg(1)->Arg(hardware_threads());

}  // namespace

BENCHMARK_MAIN();
