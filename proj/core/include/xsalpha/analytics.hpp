#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xsalpha/panel.hpp"
#include "xsalpha/portfolio.hpp"
#include "xsalpha/types.hpp"

namespace xsa {

inline constexpr double kTradingDays = 252.0;

/// sqrt(252) * mean / population std. Throws NumericError on fewer than two
/// observations or zero variance.
double sharpe(std::span<const double> returns);
double sharpe(const ReturnSeries& returns);
/// Same, but missing instead of throwing.
double sharpe_or_missing(std::span<const double> returns);

/// Spearman correlation with average ranks for ties; pairs with a missing
/// side are dropped. Missing when fewer than 3 pairs or a side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

struct ICSeries {
    std::vector<Date> dates;
    std::vector<double> values;
    double mean = kMissing;
};

/// Per-date Spearman IC between scores and `target_column` of `panel`,
/// matched on (id, date). Dates with fewer than 3 pairs are skipped.
ICSeries spearman_ic(const ScorePanel& scores, const Panel& panel, std::string_view target_column);

/// Fraction of strictly positive days.
double hit_rate(std::span<const double> returns);
/// Worst peak-to-trough loss of the compounded equity curve (starting at 1),
/// as a fraction <= 0.
double max_drawdown(std::span<const double> returns);
/// 252 * mean / |max drawdown|; missing when the drawdown is zero.
double calmar(std::span<const double> returns);

struct YearRow {
    int year = 0;
    std::size_t days = 0;
    double sharpe = kMissing;
    double total_return = kMissing;
};

struct PerfReport {
    std::string name;
    std::size_t days = 0;
    double sharpe = kMissing;
    double mean_daily = kMissing;
    double annual_return = kMissing;
    double annual_vol = kMissing;
    double max_drawdown = kMissing;
    double calmar = kMissing;
    double mean_ic = kMissing;
    double hit_rate = kMissing;
    double total_return = kMissing;
    std::vector<YearRow> years;
    double avg_year_sharpe = kMissing;
    double year_sharpe_std = kMissing;
    double best_year_sharpe = kMissing;
    double worst_year_sharpe = kMissing;
};

struct PerfOptions {
    /// Total return compounds daily returns; false sums them.
    bool compound_total = true;
};

PerfReport perf_report(std::string name, const ReturnSeries& returns, const ICSeries* ic = nullptr,
                       const PerfOptions& options = {});

/// Pearson correlation on common dates; cells with fewer than `min_overlap`
/// common dates are missing. The diagonal is 1.
std::vector<std::vector<double>> strategy_correlations(std::span<const ReturnSeries> series,
                                                       std::size_t min_overlap = 30);

// Inference.

/// Newey-West long-run variance of x with Bartlett weights 1 - l/(lags+1)
/// on sample autocovariances (divisor n).
double newey_west_long_run_variance(std::span<const double> x, int lags);
/// Variance of the sample mean: long-run variance / n.
double newey_west_mean_variance(std::span<const double> x, int lags);

struct TestResult {
    double mean_diff = 0.0;
    double t = 0.0;
    double p = 1.0;
    std::size_t n = 0;
};

/// t-test of the mean of a_t - b_t on common dates with a Newey-West
/// standard error; two-sided normal p-value. Throws DataError when fewer
/// than 30 common dates exist.
TestResult nw_mean_diff_test(const ReturnSeries& a, const ReturnSeries& b, int lags = 5);

double normal_two_sided_p(double t);

struct BootstrapOptions {
    double level = 0.95;
    int resamples = 2000;
    /// Mean block length; 0 selects ceil(n^(1/3)).
    double block_mean = 0.0;
    std::uint64_t seed = 0;
};

struct Interval {
    double estimate = kMissing;
    double lower = kMissing;
    double upper = kMissing;
};

using Statistic = std::function<double(std::span<const double>)>;

/// Percentile interval from the stationary bootstrap (geometric block
/// lengths, circular wrap). Each resample draws from its own seed derived
/// from `seed`, so the result does not depend on the worker count.
Interval stationary_bootstrap_ci(std::span<const double> x, const Statistic& statistic,
                                 const BootstrapOptions& options = {});

// Alpha decay.

struct DecayRow {
    int lag = 0;
    double sharpe = kMissing;
    double mean_daily = kMissing;
    std::size_t days = 0;
};

/// Re-runs the portfolio pipeline on `raw_scores` against forward returns
/// at each lag (`ret` column of `panel` shifted by lag + 1 rows).
std::vector<DecayRow> alpha_decay(const ScorePanel& raw_scores, const Panel& panel, std::span<const int> lags,
                                  const PortfolioOptions& options = {}, std::string_view return_column = "ret");

// Factor attribution.

struct FactorPanel {
    std::vector<Date> dates;
    std::vector<std::string> names;
    /// columns[k][t] is factor k on dates[t].
    std::vector<std::vector<double>> columns;
    /// Risk-free rate when the file has one; empty otherwise.
    std::vector<double> rf;
};

/// Header row `date,<factor>...[,RF]`. Throws DataError on malformed rows or
/// duplicate dates.
FactorPanel read_factor_panel(std::istream& in, char delimiter = ',');
FactorPanel load_factor_panel(const std::filesystem::path& path);

struct AttributionOptions {
    int lags = 5;
    /// Strategy date at factor calendar position k pairs with factor row k + shift.
    int shift = 0;
    std::size_t min_observations = 100;
};

struct FactorRegression {
    std::size_t n = 0;
    double alpha_daily = 0.0;
    double alpha_annual = 0.0;
    double alpha_t = 0.0;
    std::vector<std::string> names;
    std::vector<double> betas;
    std::vector<double> t_stats;
    double r_squared = 0.0;
};

/// OLS of the strategy on the factors with an intercept; HAC (Bartlett)
/// standard errors. Throws NumericError naming the collinear column when
/// the design is rank deficient, DataError on too few observations.
FactorRegression factor_attribution(const ReturnSeries& strategy, const FactorPanel& factors,
                                    const AttributionOptions& options = {});

// Cap-segment robustness.

struct SegmentRow {
    std::string segment;
    double sharpe = kMissing;
    std::size_t days = 0;
};

/// Splits each date's scored names into cap terciles (ties by id) and runs
/// the portfolio pipeline inside each; dates with fewer than 6 names are
/// skipped for the terciles. Rows: small, mid, large, all.
std::vector<SegmentRow> cap_segment_report(const ScorePanel& raw_scores, const Panel& panel,
                                           std::string_view cap_column, std::string_view return_column,
                                           const PortfolioOptions& options = {});

} // namespace xsa
