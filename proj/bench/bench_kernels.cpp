// Serial reference kernels against their OpenMP counterparts.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "refcap/kernels.hpp"

namespace {

using refcap::kernels::Trans;

std::vector<float> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0F, 1.0F);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<float> c(n * n);
  for (auto _ : state) {
    std::fill(c.begin(), c.end(), 0.0F);
    if constexpr (Parallel) {
      refcap::kernels::gemm<float>(Trans::kNo, Trans::kYes, n, n, n, a, b, c);
    } else {
      refcap::kernels::serial::gemm<float>(Trans::kNo, Trans::kYes, n, n, n, a, b, c);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
  state.counters["threads"] = refcap::kernels::max_threads();
}

template <bool Parallel>
void BM_Softmax(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 1024;
  const auto x = random_values(m * n, 3);
  std::vector<float> y(m * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      refcap::kernels::softmax_rows<float>(m, n, x, y);
    } else {
      refcap::kernels::serial::softmax_rows<float>(m, n, x, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * n));
}

BENCHMARK(BM_Gemm<false>)->Name("gemm/serial")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_Gemm<true>)->Name("gemm/openmp")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_Softmax<false>)->Name("softmax/serial")->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_Softmax<true>)->Name("softmax/openmp")->RangeMultiplier(4)->Range(16, 1024);

}  // namespace

BENCHMARK_MAIN();
