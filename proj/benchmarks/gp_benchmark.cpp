#include "mhe/gp.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

mhe::TrainingSet synthetic_set(int n) {
  std::mt19937 gen(12);
  std::uniform_real_distribution<double> ux(-4.0, 4.0);
  std::normal_distribution<double> nn(0.0, 0.1);
  mhe::TrainingSet ts;
  ts.inputs.resize(n);
  ts.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    ts.inputs[i] = ux(gen);
    ts.targets[i] = 0.7 * ts.inputs[i] + nn(gen);
  }
  return ts;
}

void bm_dense_predict(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const mhe::DenseGp gp(synthetic_set(n), {1.0, 1.0, 0.01});
  double z = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gp.predict(z));
    z += 1e-4;
  }
}
BENCHMARK(bm_dense_predict)->Arg(100)->Arg(400)->Arg(1600);

void bm_sparse_predict(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const mhe::DenseGp gp(synthetic_set(1600), {1.0, 1.0, 0.01});
  const mhe::SparseGp sp = mhe::sparsify(gp, m);
  double z = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sp.predict(z));
    z += 1e-4;
  }
}
BENCHMARK(bm_sparse_predict)->Arg(20)->Arg(50)->Arg(60);

void bm_sparsify(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const mhe::DenseGp gp(synthetic_set(800), {1.0, 1.0, 0.01});
  for (auto _ : state) {
    benchmark::DoNotOptimize(mhe::sparsify(gp, m));
  }
}
BENCHMARK(bm_sparsify)->Arg(50);

void bm_fit_dense(benchmark::State& state) {
  const mhe::TrainingSet ts = synthetic_set(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mhe::fit_dense(ts, {1.0, 1.0, 0.01}, {50, 1e-5, 1}));
  }
}
BENCHMARK(bm_fit_dense)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
