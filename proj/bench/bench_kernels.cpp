// Parallel kernels against the serial reference on the benchmark grid.
#include <benchmark/benchmark.h>

#include "epi/reference.hpp"
#include "epi/solvers.hpp"

using namespace epi;

namespace {

const StateGrid& grid() {
  static const StateGrid g{GridSpec{}};
  return g;
}

const AllocationResult& pbe() {
  static const AllocationResult r = solve_pbe(ModelParams{}, grid());
  return r;
}

const Stencil& agent_stencil_at_pbe() {
  static const Stencil st =
      build_agent_stencil(pbe().policy, pbe().policy, ModelParams{}, grid(), Wiring::decoupled);
  return st;
}

void BM_AgentStencil(benchmark::State& s) {
  for (auto _ : s)
    benchmark::DoNotOptimize(build_agent_stencil(pbe().policy, pbe().policy, ModelParams{}, grid(),
                                                 Wiring::decoupled));
}
void BM_AgentStencilSerial(benchmark::State& s) {
  for (auto _ : s)
    benchmark::DoNotOptimize(reference::build_agent_stencil(pbe().policy, pbe().policy,
                                                            ModelParams{}, grid(), Wiring::decoupled));
}

void BM_Residual(benchmark::State& s) {
  for (auto _ : s)
    benchmark::DoNotOptimize(stationary_residual(agent_stencil_at_pbe(), grid(), pbe().value));
}
void BM_ResidualSerial(benchmark::State& s) {
  for (auto _ : s)
    benchmark::DoNotOptimize(
        reference::stationary_residual(agent_stencil_at_pbe(), grid(), pbe().value));
}

void BM_BestResponse(benchmark::State& s) {
  for (auto _ : s)
    benchmark::DoNotOptimize(pbe_best_response(pbe().value, pbe().policy, ModelParams{}, grid()));
}
void BM_BestResponseSerial(benchmark::State& s) {
  for (auto _ : s)
    benchmark::DoNotOptimize(
        reference::pbe_best_response(pbe().value, pbe().policy, ModelParams{}, grid()));
}

void BM_StationarySweep(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(solve_stationary(agent_stencil_at_pbe(), grid()));
}
void BM_StationarySparseLU(benchmark::State& s) {
  for (auto _ : s)
    benchmark::DoNotOptimize(reference::solve_stationary(agent_stencil_at_pbe(), grid()));
}

void BM_SolvePBE(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(solve_pbe(ModelParams{}, grid()));
}
void BM_SolvePBESerial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(reference::solve_pbe(ModelParams{}, grid()));
}

void BM_SolveSPP(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(solve_spp(ModelParams{}, grid()));
}
void BM_SolveSPPSerial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(reference::solve_spp(ModelParams{}, grid()));
}

}  // namespace

BENCHMARK(BM_AgentStencil)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AgentStencilSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Residual)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ResidualSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BestResponse)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BestResponseSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StationarySweep)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StationarySparseLU)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolvePBE)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolvePBESerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveSPP)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveSPPSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
