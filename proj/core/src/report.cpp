#include "xsalpha/report.hpp"

#include <fstream>

#include <fmt/format.h>

#include "xsalpha/errors.hpp"

namespace xsa {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int decimals) {
    auto s = fmt::format("{:.{}f}", v, decimals);
    // "-0.00" reads as a sign error in a table.
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string markdown_cell(const Cell& c) {
    switch (c.kind) {
    case Cell::Kind::text:
        return c.text;
    case Cell::Kind::number:
        return is_missing(c.value) ? "NA" : fixed(c.value, c.decimals);
    case Cell::Kind::percent:
        return is_missing(c.value) ? "NA" : fixed(100.0 * c.value, c.decimals) + "%";
    case Cell::Kind::integer:
        return is_missing(c.value) ? "NA" : fixed(c.value, 0);
    }
    return {};
}

std::string quote(const std::string& s, char delimiter) {
    if (s.find_first_of(std::string{delimiter, '"', '\n'}) == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

std::string delimited_cell(const Cell& c, char delimiter) {
    if (c.kind == Cell::Kind::text) return quote(c.text, delimiter);
    if (is_missing(c.value)) return {};
    if (c.kind == Cell::Kind::integer) return fixed(c.value, 0);
    return format_double(c.value);
}

std::string markdown_body(const Table& t) {
    std::string out;
    out += "|";
    for (const auto& c : t.columns) out += " " + c + " |";
    out += "\n|";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += i == 0 ? ":---|" : "---:|";
    out += "\n";
    for (const auto& row : t.rows) {
        out += "|";
        for (const auto& c : row) out += " " + markdown_cell(c) + " |";
        out += "\n";
    }
    if (!t.notes.empty()) {
        out += "\n";
        for (const auto& n : t.notes) out += n + "\n";
    }
    return out;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
    out << text;
    if (!out) throw DataError(fmt::format("write failed for '{}'", path.string()));
}

} // namespace

std::string to_markdown(const Table& table) { return "## " + table.title + "\n\n" + markdown_body(table); }

std::string to_delimited(const Table& table, char delimiter) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += delimiter;
        out += quote(table.columns[i], delimiter);
    }
    out += "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += delimiter;
            out += delimited_cell(row[i], delimiter);
        }
        out += "\n";
    }
    return out;
}

void emit_report(std::span<const Table> tables, const fs::path& dir, const ReportFormat& format) {
    fs::create_directories(dir);
    std::string combined;
    for (const auto& t : tables) {
        if (format.markdown) {
            write_file(dir / (t.name + ".md"), to_markdown(t));
            if (!combined.empty()) combined += "\n";
            combined += to_markdown(t);
        }
        if (format.delimited) write_file(dir / (t.name + ".csv"), to_delimited(t));
    }
    if (format.markdown) write_file(dir / "report.md", combined);
}

Table panel_a(std::span<const PerfReport> reports) {
    Table t{"panel_a", "Panel A: Strategy Performance", {"Strategy", "SR", "Return", "Vol", "MaxDD", "IC", "Hit", "Total"}, {}, {}};
    for (const auto& r : reports)
        t.rows.push_back({Cell::str(r.name), Cell::num(r.sharpe), Cell::pct(r.annual_return), Cell::pct(r.annual_vol),
                          Cell::pct(r.max_drawdown), Cell::num(r.mean_ic, 4), Cell::pct(r.hit_rate),
                          Cell::pct(r.total_return)});
    return t;
}

Table panel_b(std::span<const PerfReport> reports, std::span<const std::size_t> feature_counts) {
    Table t{"panel_b", "Panel B: Year-by-Year Stability",
            {"Strategy", "Features", "Avg SR", "SR Std", "Best Yr", "Worst Yr", "Calmar"}, {}, {}};
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        const double nf = i < feature_counts.size() ? static_cast<double>(feature_counts[i]) : kMissing;
        t.rows.push_back({Cell::str(r.name), Cell::count(nf), Cell::num(r.avg_year_sharpe), Cell::num(r.year_sharpe_std),
                          Cell::num(r.best_year_sharpe), Cell::num(r.worst_year_sharpe), Cell::num(r.calmar)});
    }
    return t;
}

Table panel_c(std::span<const std::string> names, const std::vector<std::vector<double>>& correlations) {
    Table t{"panel_c", "Panel C: Return Correlations", {"Strategy"}, {}, {}};
    for (const auto& n : names) t.columns.push_back(n);
    for (std::size_t i = 0; i < names.size(); ++i) {
        std::vector<Cell> row{Cell::str(names[i])};
        for (std::size_t j = 0; j < names.size(); ++j)
            row.push_back(j <= i ? Cell::num(correlations[i][j]) : Cell::blank());
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table cost_table(const CostSummary& s) {
    Table t{"costs", "Transaction Cost Analysis", {"Metric", "Value"}, {}, {}};
    auto add = [&](const char* label, Cell c) { t.rows.push_back({Cell::str(label), std::move(c)}); };
    add("Gross Sharpe", Cell::num(s.gross_sharpe));
    add("Gross Annual Return", Cell::pct(s.gross_annual_return));
    add("Daily Turnover", Cell::pct(s.daily_turnover));
    add("Annual Turnover", Cell::num(s.annual_turnover, 1));
    add("Avg Spread Cost (bps/trade)", Cell::num(s.avg_spread_bps));
    add("Avg Impact Cost (bps/trade)", Cell::num(s.avg_impact_bps));
    add("Avg Total Cost (bps/trade)", Cell::num(s.avg_total_bps));
    add("Net Sharpe", Cell::num(s.net_sharpe));
    add("Net Annual Return", Cell::pct(s.net_annual_return));
    add("Trading Days", Cell::count(static_cast<double>(s.trading_days)));
    add("Break-even Cost (bps)", Cell::num(s.break_even_bps, 1));
    t.notes.push_back(fmt::format("Strategy: {}. AUM ${:.0f}M, impact coefficient k = {}. Static fallback trades: {}.",
                                  s.strategy, s.aum / 1e6, format_double(s.impact_k), s.fallback_trades));
    return t;
}

Table smoothing_table(std::span<const SmoothingRow> rows) {
    Table t{"smoothing",
            "Signal Smoothing",
            {"Smoothing Window", "Daily Turnover", "Annual Turnover", "Total Cost (bps)", "Gross Sharpe", "Net Sharpe"},
            {},
            {}};
    for (const auto& r : rows)
        t.rows.push_back({Cell::str(r.window <= 1 ? "None" : std::to_string(r.window)), Cell::pct(r.daily_turnover),
                          Cell::num(r.annual_turnover, 1), Cell::num(r.total_cost_bps, 1), Cell::num(r.gross_sharpe),
                          Cell::num(r.net_sharpe)});
    return t;
}

Table decay_table(const std::vector<std::pair<std::string, std::vector<DecayRow>>>& rows, std::span<const int> lags) {
    Table t{"decay", "Alpha Decay (Sharpe by Execution Lag)", {"Strategy"}, {}, {}};
    for (int l : lags) t.columns.push_back(fmt::format("Lag {}", l));
    for (const auto& [name, decay] : rows) {
        std::vector<Cell> row{Cell::str(name)};
        for (int l : lags) {
            double v = kMissing;
            for (const auto& d : decay)
                if (d.lag == l) v = d.sharpe;
            row.push_back(Cell::num(v));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table inference_table(std::span<const InferenceRow> rows, double level, int nw_lags) {
    const std::string ci = fmt::format("{:.0f}%", 100.0 * level);
    Table t{"inference",
            "Statistical Inference",
            {"Strategy", "Baseline", "Mean Diff (bps/day)", "NW t", "p-value", "Days", "Sharpe", "SR " + ci + " Lower",
             "SR " + ci + " Upper"},
            {},
            {}};
    for (const auto& r : rows) {
        const bool tested = r.tested;
        t.rows.push_back({Cell::str(r.strategy), Cell::str(tested ? r.baseline : ""),
                          tested ? Cell::num(r.test.mean_diff * 1e4) : Cell::blank(),
                          tested ? Cell::num(r.test.t) : Cell::blank(), tested ? Cell::num(r.test.p, 4) : Cell::blank(),
                          tested ? Cell::count(static_cast<double>(r.test.n)) : Cell::blank(),
                          Cell::num(r.sharpe_ci.estimate), Cell::num(r.sharpe_ci.lower), Cell::num(r.sharpe_ci.upper)});
    }
    t.notes.push_back(fmt::format("Newey-West standard errors with {} lags; stationary bootstrap percentile intervals.",
                                  nw_lags));
    return t;
}

Table attribution_table(const std::vector<std::pair<std::string, FactorRegression>>& rows) {
    Table t{"attribution", "Factor Attribution", {"Strategy", "Alpha (ann.)", "Alpha t", "R2", "N"}, {}, {}};
    std::vector<std::string> factors;
    if (!rows.empty()) factors = rows.front().second.names;
    for (const auto& f : factors) {
        t.columns.push_back(f);
        t.columns.push_back(f + " t");
    }
    for (const auto& [name, reg] : rows) {
        std::vector<Cell> row{Cell::str(name), Cell::pct(reg.alpha_annual), Cell::num(reg.alpha_t),
                              Cell::num(reg.r_squared, 3), Cell::count(static_cast<double>(reg.n))};
        for (std::size_t k = 0; k < factors.size(); ++k) {
            row.push_back(k < reg.betas.size() ? Cell::num(reg.betas[k], 3) : Cell::blank());
            row.push_back(k < reg.t_stats.size() ? Cell::num(reg.t_stats[k]) : Cell::blank());
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table segment_table(const std::vector<std::pair<std::string, std::vector<SegmentRow>>>& rows) {
    Table t{"segments", "Market-Cap Segments (Sharpe)", {"Strategy", "Small", "Mid", "Large", "All"}, {}, {}};
    for (const auto& [name, segs] : rows) {
        std::vector<Cell> row{Cell::str(name)};
        for (const char* seg : {"small", "mid", "large", "all"}) {
            double v = kMissing;
            for (const auto& s : segs)
                if (s.segment == seg) v = s.sharpe;
            row.push_back(Cell::num(v));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table optimizer_table(std::span<const ConstructionRow> rows) {
    Table t{"optimizer",
            "Portfolio Optimization Comparison",
            {"Method", "Net Sharpe", "Effective N", "Max Position", "Sector Tilts"},
            {},
            {}};
    for (const auto& r : rows)
        t.rows.push_back({Cell::str(r.label), Cell::num(r.net_sharpe), Cell::num(r.effective_n, 1),
                          Cell::pct(r.max_position, 2), Cell::pct(r.sector_tilts)});
    t.notes.push_back("Effective N = 1/HHI of weights; Sector Tilts = sum over sectors of |net weight|. Concentration "
                      "figures are means over rebalance days.");
    return t;
}

Table pattern_table(const fx::PatternStats& s) {
    Table t{"patterns", "Feature Pattern Analysis", {"Pattern", "Value"}, {}, {}};
    auto add = [&](std::string label, Cell c) { t.rows.push_back({Cell::str(std::move(label)), std::move(c)}); };
    add("Features", Cell::count(static_cast<double>(s.features)));
    add("Mean operations", Cell::num(s.mean_operations, 1));
    add("Median operations", Cell::num(s.median_operations, 1));
    add("Cross-sectional ranking", Cell::pct(s.cross_sectional_ranking));
    add("Regime normalization", Cell::pct(s.regime_normalization));
    add("Variable interactions", Cell::pct(s.variable_interactions));
    add("Multi-timeframe", Cell::pct(s.multi_timeframe));
    add("Outlier z-scoring", Cell::pct(s.outlier_zscoring));
    add("Momentum adjustment", Cell::pct(s.momentum_adjustment));
    add("Window specifications", Cell::count(static_cast<double>(s.window_specs)));
    for (const char* bucket : {"5", "10", "20-21", "60", "other"}) {
        const auto it = s.window_histogram.find(bucket);
        if (it != s.window_histogram.end()) add(fmt::format("Window {}", bucket), Cell::pct(it->second));
    }
    return t;
}

} // namespace xsa
