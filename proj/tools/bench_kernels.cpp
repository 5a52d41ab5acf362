// Benchmark comparing the OpenMP kernels against the serial reference.
// Run with --benchmark_filter=matmul etc.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mcl/kernels.hpp"

namespace {

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

void bm_matmul_omp(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    mcl::kernels::matmul(a.data(), b.data(), c.data(), n, n, n);
    benchmark::ClobberMemory();
  }
}

void bm_matmul_serial(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    mcl::kernels::serial::matmul(a.data(), b.data(), c.data(), n, n, n);
    benchmark::ClobberMemory();
  }
}

void bm_tanh_omp(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const auto x = random_vec(n, 3);
  std::vector<double> y(n);
  for (auto _ : state) {
    mcl::kernels::tanh(x.data(), y.data(), n);
    benchmark::ClobberMemory();
  }
}

void bm_tanh_serial(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const auto x = random_vec(n, 3);
  std::vector<double> y(n);
  for (auto _ : state) {
    mcl::kernels::serial::tanh(x.data(), y.data(), n);
    benchmark::ClobberMemory();
  }
}

BENCHMARK(bm_matmul_omp)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_matmul_serial)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_tanh_omp)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(bm_tanh_serial)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);

} // namespace

BENCHMARK_MAIN();
