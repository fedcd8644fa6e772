// Compares the OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include "hystdyn/kernels.hpp"
#include "hystdyn/network.hpp"
#include "hystdyn/training.hpp"

namespace {

using namespace hystdyn;

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  return glorot_uniform(rng, r, c);
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Vector v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <auto Kernel>
void BM_gemv(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix m = random_matrix(n, n, 1);
  const Vector x = random_vector(n, 2);
  Vector y(n);
  for (auto _ : state) {
    Kernel(m, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <auto Kernel>
void BM_gemv_t(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix m = random_matrix(n, n, 1);
  const Vector x = random_vector(n, 2);
  Vector y(n, 0.0);
  for (auto _ : state) {
    Kernel(m, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <auto Kernel>
void BM_ger(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Matrix m(n, n);
  const Vector a = random_vector(n, 3);
  const Vector b = random_vector(n, 4);
  for (auto _ : state) {
    Kernel(a, b, m);
    benchmark::DoNotOptimize(m.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

BENCHMARK(BM_gemv<&kernels::reference::gemv>)->Name("gemv/reference")->Arg(64)->Arg(300)->Arg(1200);
BENCHMARK(BM_gemv<&kernels::gemv>)->Name("gemv/omp")->Arg(64)->Arg(300)->Arg(1200);
BENCHMARK(BM_gemv_t<&kernels::reference::gemv_t_acc>)->Name("gemv_t/reference")->Arg(64)->Arg(300)->Arg(1200);
BENCHMARK(BM_gemv_t<&kernels::gemv_t_acc>)->Name("gemv_t/omp")->Arg(64)->Arg(300)->Arg(1200);
BENCHMARK(BM_ger<&kernels::reference::ger>)->Name("ger/reference")->Arg(64)->Arg(300)->Arg(1200);
BENCHMARK(BM_ger<&kernels::ger>)->Name("ger/omp")->Arg(64)->Arg(300)->Arg(1200);

// One inference step of the full-size predictor (h = 300, k = 4).
void BM_predict_step(benchmark::State& state) {
  Rng rng(7);
  const LstmNetwork net = LstmNetwork::initialize(9, 300, 300, rng);
  const Vector x = random_vector(9, 8);
  LstmState s = LstmState::zeros(300);
  for (auto _ : state) benchmark::DoNotOptimize(predict_step(net, x, s));
}
BENCHMARK(BM_predict_step);

template <bool Parallel>
void BM_batch_gradient(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  Rng rng(9);
  const LstmNetwork net = LstmNetwork::initialize(9, h, h, rng);
  WindowSet windows;
  for (std::size_t i = 0; i < 200; ++i) {
    windows.inputs.push_back(random_vector(9, 100 + i));
    windows.targets.push_back(rng.uniform());
  }
  const std::vector<Subsequence> batch = {{0, 50}, {50, 50}, {100, 50}, {150, 50}};
  for (auto _ : state) {
    BatchGradient g = Parallel ? batch_gradient(net, windows, batch)
                               : reference::batch_gradient(net, windows, batch);
    benchmark::DoNotOptimize(g.loss);
  }
}
BENCHMARK(BM_batch_gradient<false>)->Name("batch_gradient/reference")->Arg(64)->Arg(300);
BENCHMARK(BM_batch_gradient<true>)->Name("batch_gradient/omp")->Arg(64)->Arg(300);

}  // namespace

BENCHMARK_MAIN();
