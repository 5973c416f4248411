#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "xsalpha/analytics.hpp"
#include "xsalpha/errors.hpp"
#include "xsalpha/parallel.hpp"

namespace xsa {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double quantile_sorted(const std::vector<double>& v, double q) {
    // Linear interpolation between order statistics.
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

} // namespace

double newey_west_long_run_variance(std::span<const double> x, int lags) {
    if (lags < 0) throw std::invalid_argument("newey_west: lags must be >= 0");
    const std::size_t n = x.size();
    if (n == 0) throw std::invalid_argument("newey_west: empty series");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    auto gamma = [&](std::size_t l) {
        double s = 0.0;
        for (std::size_t t = l; t < n; ++t) s += (x[t] - mean) * (x[t - l] - mean);
        return s / static_cast<double>(n);
    };
    double lrv = gamma(0);
    for (int l = 1; l <= lags && static_cast<std::size_t>(l) < n; ++l) {
        const double w = 1.0 - static_cast<double>(l) / static_cast<double>(lags + 1);
        lrv += 2.0 * w * gamma(static_cast<std::size_t>(l));
    }
    return lrv;
}

double newey_west_mean_variance(std::span<const double> x, int lags) {
    return newey_west_long_run_variance(x, lags) / static_cast<double>(x.size());
}

double normal_two_sided_p(double t) { return std::erfc(std::abs(t) / std::sqrt(2.0)); }

TestResult nw_mean_diff_test(const ReturnSeries& a, const ReturnSeries& b, int lags) {
    const AlignedPair p = align_on_dates(a, b);
    if (p.dates.size() < 30)
        throw DataError(fmt::format("nw_mean_diff_test: {} common dates, need at least 30", p.dates.size()));
    std::vector<double> d(p.dates.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = p.a[i] - p.b[i];
    TestResult res;
    res.n = d.size();
    for (double v : d) res.mean_diff += v;
    res.mean_diff /= static_cast<double>(d.size());
    const double var = newey_west_mean_variance(d, lags);
    if (!(var > 0.0)) {
        if (res.mean_diff != 0.0) throw NumericError("nw_mean_diff_test: constant non-zero differential");
        return res;
    }
    res.t = res.mean_diff / std::sqrt(var);
    res.p = normal_two_sided_p(res.t);
    return res;
}

Interval stationary_bootstrap_ci(std::span<const double> x, const Statistic& statistic,
                                 const BootstrapOptions& options) {
    if (x.empty()) throw std::invalid_argument("stationary_bootstrap_ci: empty series");
    if (options.resamples < 1) throw std::invalid_argument("stationary_bootstrap_ci: resamples must be >= 1");
    if (!(options.level > 0.0 && options.level < 1.0))
        throw std::invalid_argument("stationary_bootstrap_ci: level must be in (0, 1)");
    const std::size_t n = x.size();
    const double block = options.block_mean > 0.0 ? options.block_mean : std::ceil(std::cbrt(static_cast<double>(n)));
    const double p_new = 1.0 / block;

    Interval out;
    out.estimate = statistic(x);
    std::vector<double> stats(static_cast<std::size_t>(options.resamples));
    parallel_for(stats.size(), [&](std::size_t b) {
        std::mt19937_64 rng(splitmix64(options.seed ^ splitmix64(b)));
        std::uniform_int_distribution<std::size_t> start(0, n - 1);
        std::bernoulli_distribution jump(p_new);
        std::vector<double> sample(n);
        std::size_t pos = start(rng);
        for (std::size_t t = 0; t < n; ++t) {
            if (t > 0) pos = jump(rng) ? start(rng) : (pos + 1) % n;
            sample[t] = x[pos];
        }
        stats[b] = statistic(sample);
    });
    std::vector<double> finite;
    for (double s : stats)
        if (std::isfinite(s)) finite.push_back(s);
    if (finite.empty()) throw NumericError("stationary_bootstrap_ci: statistic undefined on every resample");
    std::sort(finite.begin(), finite.end());
    const double alpha = 1.0 - options.level;
    out.lower = quantile_sorted(finite, 0.5 * alpha);
    out.upper = quantile_sorted(finite, 1.0 - 0.5 * alpha);
    return out;
}

} // namespace xsa
