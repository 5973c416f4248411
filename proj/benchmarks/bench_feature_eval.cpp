#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "xsalpha/feature_dsl.hpp"
#include "xsalpha/panel.hpp"

namespace {

xsa::Panel make_panel(std::size_t n, std::size_t T) {
    xsa::PanelBuilder b({"close", "volume", "returns"});
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    const auto d0 = xsa::Date::from_ymd(2015, 1, 1);
    for (std::size_t i = 0; i < n; ++i) {
        double px = 100.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double r = 0.02 * g(rng);
            px *= std::exp(r);
            b.add_row("S" + std::to_string(i), xsa::Date(d0.ordinal() + static_cast<std::int32_t>(t)),
                      {px, 1e6 * std::exp(g(rng)), r});
        }
    }
    return std::move(b).build();
}

void BM_RankedMomentum(benchmark::State& state) {
    const auto panel = make_panel(static_cast<std::size_t>(state.range(0)), 252);
    const auto expr = xsa::fx::parse_feature(
        "cs_rank(rolling_mean(col(returns), 20) / rolling_std(col(returns), 60, ddof=1))");
    for (auto _ : state) benchmark::DoNotOptimize(xsa::fx::evaluate(*expr, panel));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(panel.rows()));
}
BENCHMARK(BM_RankedMomentum)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_ZScoredGap(benchmark::State& state) {
    const auto panel = make_panel(static_cast<std::size_t>(state.range(0)), 252);
    const auto expr = xsa::fx::parse_feature(
        "cs_zscore(ts_zscore(ewm_mean(col(close) / lag(col(close), 1) - 1, 5), 21) * log(col(volume)))");
    for (auto _ : state) benchmark::DoNotOptimize(xsa::fx::evaluate(*expr, panel));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(panel.rows()));
}
BENCHMARK(BM_ZScoredGap)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
