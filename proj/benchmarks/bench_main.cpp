#include <benchmark/benchmark.h>

#include "phaselp/harness.hpp"
#include "phaselp/solver.hpp"
#include "phaselp/theory.hpp"

using namespace phaselp;

static void BM_SpoSolve(benchmark::State& state) {
  const theory::Alpha alpha(3.0);
  const theory::CosineSimilarity rho(0.2);
  for (auto _ : state) benchmark::DoNotOptimize(theory::spo_solve(rho, alpha));
}
BENCHMARK(BM_SpoSolve);

static void BM_LampCertificate(benchmark::State& state) {
  const theory::Alpha alpha(4.0);
  for (auto _ : state) benchmark::DoNotOptimize(theory::lamp_certificate(alpha));
}
BENCHMARK(BM_LampCertificate);

static void BM_GenerateInstance(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_instance({n, 5.0, 0.3, seed++}));
}
BENCHMARK(BM_GenerateInstance)->Arg(100)->Arg(200)->Unit(benchmark::kMicrosecond);

static void BM_PhaseMax(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ProblemInstance inst = generate_instance({n, 5.0, 0.5, 1});
  SolverConfig config;
  config.algorithm = state.range(1) == 0 ? LpAlgorithm::InteriorPoint : LpAlgorithm::PrimalDual;
  for (auto _ : state) benchmark::DoNotOptimize(phasemax(inst, config));
  state.SetLabel(std::string(to_string(config.algorithm)));
}
BENCHMARK(BM_PhaseMax)
    ->Args({100, 0})
    ->Args({200, 0})
    ->Args({100, 1})
    ->Unit(benchmark::kMillisecond);

static void BM_PhaseLamp(benchmark::State& state) {
  const ProblemInstance inst = generate_instance({200, 4.0, 0.1, 2});
  for (auto _ : state) benchmark::DoNotOptimize(phaselamp(inst));
}
BENCHMARK(BM_PhaseLamp)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
