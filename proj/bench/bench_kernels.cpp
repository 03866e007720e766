#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "bicameral/doppelganger.hpp"
#include "bicameral/kernels.hpp"

namespace kernels = bicameral::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

using Gemm = void (*)(std::span<const double>, std::span<const double>, std::span<double>,
                      std::size_t, std::size_t, std::size_t);

void run_gemm(benchmark::State& state, Gemm gemm) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1);
  const auto b = random_values(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    gemm(a, b, c, n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * n * n * n));
}

void BM_GemmSerial(benchmark::State& state) { run_gemm(state, kernels::serial::gemm_nn); }
void BM_GemmParallel(benchmark::State& state) { run_gemm(state, kernels::parallel::gemm_nn); }
void BM_GemmNtSerial(benchmark::State& state) { run_gemm(state, kernels::serial::gemm_nt); }
void BM_GemmNtParallel(benchmark::State& state) { run_gemm(state, kernels::parallel::gemm_nt); }

// One bicameral pass at toy scale: language tower plus Doppelgänger.
void BM_BicameralForward(benchmark::State& state) {
  bicameral::LMConfig lc;
  lc.vocab_size = 32;
  bicameral::DoppelConfig dc;
  bicameral::LanguageModel lm(lc, 1);
  lm.freeze();
  bicameral::BicameralModel bm(std::move(lm), bicameral::Doppelganger(dc, lc, 2));
  bicameral::TokenIds ids(static_cast<std::size_t>(state.range(0)));
  for (std::size_t t = 0; t < ids.size(); ++t) ids[t] = static_cast<std::int64_t>(t % 32);
  for (auto _ : state) benchmark::DoNotOptimize(bm.forward(ids));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * ids.size()));
}

}  // namespace

BENCHMARK(BM_GemmSerial)->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_GemmParallel)->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_GemmNtSerial)->Arg(128);
BENCHMARK(BM_GemmNtParallel)->Arg(128);
BENCHMARK(BM_BicameralForward)->Arg(16)->Arg(64);

BENCHMARK_MAIN();
