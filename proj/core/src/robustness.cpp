#include <algorithm>
#include <numeric>

#include "xsalpha/analytics.hpp"
#include "xsalpha/panel_store.hpp"

namespace xsa {

std::vector<DecayRow> alpha_decay(const ScorePanel& raw_scores, const Panel& panel, std::span<const int> lags,
                                  const PortfolioOptions& options, std::string_view return_column) {
    const WeightBook book = build_weight_book(raw_scores, options);
    std::vector<DecayRow> rows;
    for (int lag : lags) {
        const Panel shifted = forward_return(panel, lag, return_column);
        const ReturnSeries r = portfolio_returns(book, shifted, forward_return_column(lag));
        DecayRow row;
        row.lag = lag;
        row.days = r.size();
        row.sharpe = sharpe_or_missing(r.values);
        if (!r.empty()) row.mean_daily = std::accumulate(r.values.begin(), r.values.end(), 0.0) / static_cast<double>(r.size());
        rows.push_back(row);
    }
    return rows;
}

std::vector<SegmentRow> cap_segment_report(const ScorePanel& raw_scores, const Panel& panel,
                                           std::string_view cap_column, std::string_view return_column,
                                           const PortfolioOptions& options) {
    const Panel& keys = raw_scores.keys();
    const auto scores = raw_scores.values();
    const auto cap = panel.column(cap_column);
    const auto sec = keys.row_security();
    std::vector<std::optional<std::size_t>> to_panel;
    for (const auto& id : keys.securities()) to_panel.push_back(panel.find_security(id));

    // segment[r]: 0 small, 1 mid, 2 large, -1 unassigned.
    std::vector<int> segment(keys.rows(), -1);
    std::vector<std::uint8_t> date_used(keys.num_dates(), 0);
    for (std::size_t d = 0; d < keys.num_dates(); ++d) {
        const Date date = keys.calendar()[d];
        std::vector<std::pair<double, std::size_t>> names;
        for (auto r : keys.rows_on(d)) {
            if (is_missing(scores[r])) continue;
            const auto& ps = to_panel[sec[r]];
            if (!ps) continue;
            const auto row = panel.find_row(*ps, date);
            if (!row || is_missing(cap[*row])) continue;
            names.emplace_back(cap[*row], r);
        }
        if (names.size() < 6) continue;
        date_used[d] = 1;
        // Rows on a date are in security-id order, so a stable sort breaks cap ties by id.
        std::stable_sort(names.begin(), names.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        const std::size_t n = names.size();
        for (std::size_t i = 0; i < n; ++i) segment[names[i].second] = static_cast<int>(3 * i / n);
    }

    const auto run = [&](std::string label, const std::vector<std::uint8_t>& mask, bool skip_unused_dates) {
        const WeightBook book = build_weight_book(raw_scores, options, mask);
        const ReturnSeries r = portfolio_returns(book, panel, return_column);
        std::vector<double> kept;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const auto d = keys.find_date(r.dates[i]);
            if (skip_unused_dates && d && !date_used[*d]) continue;
            if (book.days[i].flagged) continue;
            kept.push_back(r.values[i]);
        }
        return SegmentRow{std::move(label), sharpe_or_missing(kept), kept.size()};
    };

    std::vector<SegmentRow> out;
    const char* labels[] = {"small", "mid", "large"};
    for (int s = 0; s < 3; ++s) {
        std::vector<std::uint8_t> mask(keys.rows());
        for (std::size_t r = 0; r < mask.size(); ++r) mask[r] = segment[r] == s;
        out.push_back(run(labels[s], mask, true));
    }
    out.push_back(run("all", {}, false));
    return out;
}

} // namespace xsa
