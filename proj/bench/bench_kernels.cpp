// Serial reference kernels against the OpenMP versions, plus whole-ensemble
// throughput at 1 and N workers. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <thread>
#include <vector>

#include "kpz2d/kernels.hpp"
#include "kpz2d/kpz.hpp"
#include "kpz2d/noise.hpp"

using namespace kpz2d;
namespace k = kpz2d::kernels;

namespace {

std::vector<double> random_field(std::size_t L) {
  NoiseStream s(1, 0);
  std::vector<double> v(L * L);
  for (double& x : v) x = s.standard_normal();
  return v;
}

template <bool Parallel>
void BM_laplacian(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const auto in = random_field(L);
  std::vector<double> out(L * L);
  const k::StencilGeometry g{L, 1.0};
  for (auto _ : state) {
    if constexpr (Parallel)
      k::laplacian(in, out, g);
    else
      k::laplacian_reference(in, out, g);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(L * L));
}

template <bool Parallel>
void BM_grad_squared(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const auto nl = state.range(1) ? k::Nonlinearity::lam_shin : k::Nonlinearity::central;
  const auto in = random_field(L);
  std::vector<double> out(L * L);
  const k::StencilGeometry g{L, 1.0};
  for (auto _ : state) {
    if constexpr (Parallel)
      k::grad_squared(in, out, g, nl);
    else
      k::grad_squared_reference(in, out, g, nl);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(L * L));
}

template <bool Parallel>
void BM_kpz_update(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const auto in = random_field(L);
  const auto inc = random_field(L);
  std::vector<double> out(L * L);
  const k::StencilGeometry g{L, 1.0};
  const k::KpzCoefficients c{0.05, 1.0, 1.5, k::Nonlinearity::lam_shin};
  for (auto _ : state) {
    bool ok;
    if constexpr (Parallel)
      ok = k::kpz_update(in, inc, out, g, c);
    else
      ok = k::kpz_update_reference(in, inc, out, g, c);
    benchmark::DoNotOptimize(ok);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(L * L));
}

// Full integrator including noise generation; items are site updates.
void BM_ensemble(benchmark::State& state) {
  KpzParams p;
  p.side = 128;
  p.t_max = 5.0;
  p.n_realizations = 4;
  struct Nothing {
    void on_snapshot(std::size_t, const PhaseField&) {}
  };
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = run_ensemble(p, [](std::uint64_t) { return Nothing{}; }, ExecutionPolicy{workers});
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * 4L * 128 * 128 * 100);
}

}  // namespace

BENCHMARK(BM_laplacian<false>)->Name("laplacian/serial")->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_laplacian<true>)->Name("laplacian/parallel")->Arg(64)->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(BM_grad_squared<false>)->Name("grad_squared/serial")->ArgsProduct({{256, 1024}, {0, 1}});
BENCHMARK(BM_grad_squared<true>)->Name("grad_squared/parallel")->ArgsProduct({{256, 1024}, {0, 1}})->UseRealTime();
BENCHMARK(BM_kpz_update<false>)->Name("kpz_update/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_kpz_update<true>)->Name("kpz_update/parallel")->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(BM_ensemble)->Name("ensemble/workers")->Apply([](benchmark::internal::Benchmark* b) {
  b->Arg(1);
  if (const auto n = std::thread::hardware_concurrency(); n > 1) b->Arg(static_cast<int>(n));
  b->UseRealTime()->Unit(benchmark::kMillisecond);
});

BENCHMARK_MAIN();
