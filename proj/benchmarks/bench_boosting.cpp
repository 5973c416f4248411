#include <random>

#include <benchmark/benchmark.h>

#include "xsalpha/boosting.hpp"

namespace {

void BM_FitTrees(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    const std::size_t cols = 8;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    xsa::FeatureMatrix x;
    x.rows = rows;
    x.cols = cols;
    x.values.resize(rows * cols);
    for (auto& v : x.values) v = g(rng);
    std::vector<double> y(rows);
    for (std::size_t r = 0; r < rows; ++r) y[r] = 0.3 * x.at(r, 0) - 0.2 * x.at(r, 1) * x.at(r, 2) + g(rng);
    xsa::BoostParams p;
    p.n_trees = 20;
    p.subsample_fraction = 0.8;
    for (auto _ : state) benchmark::DoNotOptimize(xsa::BoostedTrees::fit(x, y, p));
}
BENCHMARK(BM_FitTrees)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
