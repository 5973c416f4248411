#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xsalpha/analytics.hpp"
#include "xsalpha/feature_dsl.hpp"
#include "xsalpha/optimizer.hpp"

namespace xsa {

struct Cell {
    enum class Kind { text, number, percent, integer };
    Kind kind = Kind::text;
    std::string text;
    double value = kMissing;
    /// Decimals in markdown output; delimited output keeps full precision.
    int decimals = 2;

    static Cell str(std::string s) { return {Kind::text, std::move(s), kMissing, 0}; }
    static Cell num(double v, int decimals = 2) { return {Kind::number, {}, v, decimals}; }
    /// Stored as a fraction, shown as a percentage in markdown.
    static Cell pct(double v, int decimals = 1) { return {Kind::percent, {}, v, decimals}; }
    static Cell count(double v) { return {Kind::integer, {}, v, 0}; }
    static Cell blank() { return {}; }
};

struct Table {
    /// File stem, e.g. "panel_a".
    std::string name;
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::string> notes;
};

std::string to_markdown(const Table& table);
/// Header plus one line per row; missing numbers are empty fields.
std::string to_delimited(const Table& table, char delimiter = ',');

struct ReportFormat {
    bool markdown = true;
    bool delimited = true;
};

/// Writes `<name>.md` / `<name>.csv` per table and a combined `report.md`.
void emit_report(std::span<const Table> tables, const std::filesystem::path& dir, const ReportFormat& format);

/// Strategy, SR, Return, Vol, MaxDD, IC, Hit, Total.
Table panel_a(std::span<const PerfReport> reports);
/// Strategy, Features, Avg SR, SR Std, Best Yr, Worst Yr, Calmar.
Table panel_b(std::span<const PerfReport> reports, std::span<const std::size_t> feature_counts);
/// Lower triangle including the diagonal.
Table panel_c(std::span<const std::string> names, const std::vector<std::vector<double>>& correlations);

struct CostSummary {
    std::string strategy;
    double gross_sharpe = kMissing;
    double gross_annual_return = kMissing;
    double daily_turnover = kMissing;
    double annual_turnover = kMissing;
    double avg_spread_bps = kMissing;
    double avg_impact_bps = kMissing;
    double avg_total_bps = kMissing;
    double net_sharpe = kMissing;
    double net_annual_return = kMissing;
    std::size_t trading_days = 0;
    double break_even_bps = kMissing;
    double aum = kMissing;
    double impact_k = kMissing;
    std::size_t fallback_trades = 0;
};

Table cost_table(const CostSummary& summary);

struct SmoothingRow {
    int window = 1;
    double daily_turnover = kMissing;
    double annual_turnover = kMissing;
    double total_cost_bps = kMissing;
    double gross_sharpe = kMissing;
    double net_sharpe = kMissing;
};

Table smoothing_table(std::span<const SmoothingRow> rows);

/// Strategy, then one Sharpe column per lag.
Table decay_table(const std::vector<std::pair<std::string, std::vector<DecayRow>>>& rows, std::span<const int> lags);

struct InferenceRow {
    std::string strategy;
    std::string baseline;
    TestResult test;
    bool tested = false;
    Interval sharpe_ci;
};

Table inference_table(std::span<const InferenceRow> rows, double level, int nw_lags);

Table attribution_table(const std::vector<std::pair<std::string, FactorRegression>>& rows);

Table segment_table(const std::vector<std::pair<std::string, std::vector<SegmentRow>>>& rows);

/// Method, Net Sharpe, Effective N, Max Position, Sector Tilts.
Table optimizer_table(std::span<const ConstructionRow> rows);

/// Feature-pattern prevalence over a corpus, plus the window histogram.
Table pattern_table(const fx::PatternStats& stats);

} // namespace xsa
