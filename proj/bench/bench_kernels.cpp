// Parallel kernels against their serial references.

#include <random>

#include <benchmark/benchmark.h>

#include "its/probability.hpp"
#include "its/similarity.hpp"

namespace prob = its::probability;
namespace sim = its::similarity;

namespace {

prob::SimulationConfig sim_config(const benchmark::State& state) {
  prob::SimulationConfig c;
  c.code_space = state.range(0);
  c.iterations = 100;
  c.draw_size = 15;
  c.replications = 1000;
  return c;
}

std::vector<sim::EmbeddingVector> vectors(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<sim::EmbeddingVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    sim::EmbeddingVector v{"c" + std::to_string(i), {}};
    for (std::size_t d = 0; d < dim; ++d) v.values.push_back(g(rng));
    out.push_back(std::move(v));
  }
  return out;
}

void BM_SimulateParallel(benchmark::State& state) {
  const auto c = sim_config(state);
  for (auto _ : state) benchmark::DoNotOptimize(prob::simulate_code_space(c));
}

void BM_SimulateSerial(benchmark::State& state) {
  const auto c = sim_config(state);
  for (auto _ : state) benchmark::DoNotOptimize(prob::simulate_code_space_serial(c));
}

void BM_MatrixParallel(benchmark::State& state) {
  const auto v = vectors(static_cast<std::size_t>(state.range(0)), 768);
  for (auto _ : state) benchmark::DoNotOptimize(sim::similarity_matrix(v));
}

void BM_MatrixSerial(benchmark::State& state) {
  const auto v = vectors(static_cast<std::size_t>(state.range(0)), 768);
  for (auto _ : state) benchmark::DoNotOptimize(sim::similarity_matrix_serial(v));
}

}  // namespace

BENCHMARK(BM_SimulateParallel)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SimulateSerial)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MatrixParallel)->Arg(66)->Arg(500)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MatrixSerial)->Arg(66)->Arg(500)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
