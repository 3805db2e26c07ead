// OpenMP kernels against the serial reference evaluator.

#include <benchmark/benchmark.h>

#include "alphaforge/evaluator.hpp"
#include "alphaforge/panel.hpp"
#include "reference_eval.hpp"

using namespace alphaforge;

namespace {

const char* const kExprs[] = {
    "Add(close,open)",
    "CSRank(volume)",
    "Mean(close,20)",
    "Std(volume,40)",
    "Med(close,20)",
    "Rank(close,30)",
    "Corr(close,volume,20)",
    "Sub(Corr(high,Std(volume,20),30),Delta(vwap,20))",
};

const Panel& market() {
    static const Panel panel = synth_market(1, 300, 500, parse_prefix("close"), 0.5).panel;
    return panel;
}

void BM_Kernels(benchmark::State& state) {
    const auto expr = parse_prefix(kExprs[state.range(0)]);
    const Panel& panel = market();
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(expr, panel));
    state.SetLabel(kExprs[state.range(0)]);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(panel.days() * panel.stocks()));
}

void BM_Reference(benchmark::State& state) {
    const auto expr = parse_prefix(kExprs[state.range(0)]);
    const Panel& panel = market();
    for (auto _ : state) benchmark::DoNotOptimize(reference::evaluate(expr, panel));
    state.SetLabel(kExprs[state.range(0)]);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(panel.days() * panel.stocks()));
}

constexpr int kCount = static_cast<int>(sizeof kExprs / sizeof kExprs[0]);

}  // namespace

BENCHMARK(BM_Kernels)->DenseRange(0, kCount - 1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Reference)->DenseRange(0, kCount - 1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
