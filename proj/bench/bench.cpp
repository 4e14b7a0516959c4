// Serial reference kernels against the OpenMP ones. Run with
//   homog_bench --benchmark_counters_tabular=true
// The threaded variants take the thread count as their argument and report
// wall-clock rates, since CPU time of the calling thread says little there.

#include <benchmark/benchmark.h>

#include "homog/experiment.hpp"
#include "homog/rwre.hpp"

using namespace homog;

namespace {

EnvironmentSpec bernoulli14() { return EnvironmentSpec::iid(2, Law::bernoulli(1.0, 4.0, 0.5)); }

constexpr std::int64_t kWalks = 4096;
constexpr std::int64_t kSteps = 200;

void BM_WalksSerial(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(
            estimate_functional_serial(bernoulli14(), kWalks, kSteps, Functional::gaussian(), 1).value);
    state.counters["steps/s"] =
        benchmark::Counter(static_cast<double>(kWalks * kSteps), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_WalksParallel(benchmark::State& state) {
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(
            estimate_functional(bernoulli14(), kWalks, kSteps, Functional::gaussian(), 1, threads).value);
    state.counters["steps/s"] =
        benchmark::Counter(static_cast<double>(kWalks * kSteps), benchmark::Counter::kIsIterationInvariantRate);
}

ExperimentConfig corrector_config(int threads) {
    ExperimentConfig cfg;
    cfg.environment = bernoulli14();
    cfg.xi = {1.0, 0.0};
    cfg.workers = threads;
    return cfg;
}

void BM_CorrectorSerial(benchmark::State& state) {
    const auto cfg = corrector_config(1);
    const auto side = state.range(0);
    for (auto _ : state)
        benchmark::DoNotOptimize(run_realizations_serial(cfg, ExperimentMethod::PeriodLaw, side, 16).size());
    state.SetItemsProcessed(state.iterations() * 16);
}

void BM_CorrectorParallel(benchmark::State& state) {
    const auto cfg = corrector_config(static_cast<int>(state.range(1)));
    const auto side = state.range(0);
    for (auto _ : state)
        benchmark::DoNotOptimize(run_realizations(cfg, ExperimentMethod::PeriodLaw, side, 16).size());
    state.SetItemsProcessed(state.iterations() * 16);
}

}  // namespace

BENCHMARK(BM_WalksSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WalksParallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorrectorSerial)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorrectorParallel)->Args({16, 1})->Args({16, 4})->Args({32, 1})->Args({32, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
