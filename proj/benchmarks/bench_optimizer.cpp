#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "xsalpha/optimizer.hpp"

namespace {

void BM_SolveSectorNeutral(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.01, 0.04);
    xsa::OptProblem p;
    std::vector<double> vol(n);
    std::vector<std::string> sectors(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.alpha.push_back(g(rng));
        p.cost.push_back(0.001 * u(rng) / 0.04);
        vol[i] = u(rng);
        sectors[i] = "S" + std::to_string(i % 10);
    }
    p.prev.assign(n, 0.0);
    p.w_max = 0.08;
    p.sector_neutral = state.range(1) != 0;
    const auto risk = xsa::build_risk_model(vol, sectors, xsa::RiskKind::sector_factor);
    for (auto _ : state) benchmark::DoNotOptimize(xsa::solve_portfolio(p, risk));
}
BENCHMARK(BM_SolveSectorNeutral)->Args({50, 0})->Args({50, 1})->Args({500, 0})->Args({500, 1})->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
