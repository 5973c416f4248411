#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "xsalpha/errors.hpp"
#include "xsalpha/panel_store.hpp"

namespace xsa {

LogReturns compute_log_returns(const Panel& panel, std::string_view price_column, std::string_view out_column) {
    const auto price = panel.column(price_column);
    std::vector<double> ret(panel.rows(), kMissing);
    std::size_t warnings = 0;
    for (std::size_t s = 0; s < panel.num_securities(); ++s) {
        const auto range = panel.security_rows(s);
        for (std::size_t r = range.begin + 1; r < range.end; ++r) {
            const double prev = price[r - 1];
            const double cur = price[r];
            if (is_missing(prev) || is_missing(cur)) continue;
            if (prev <= 0.0 || cur <= 0.0) {
                ++warnings;
                continue;
            }
            ret[r] = std::log(cur / prev);
        }
    }
    return {panel.with_column(std::string(out_column), std::move(ret)), warnings};
}

std::string forward_return_column(int lag) { return fmt::format("fwd_ret_lag{}", lag); }

Panel forward_return(const Panel& panel, int lag, std::string_view return_column) {
    if (lag < 0) throw std::invalid_argument("forward_return: lag must be non-negative");
    const auto ret = panel.column(return_column);
    std::vector<double> fwd(panel.rows(), kMissing);
    const auto ahead = static_cast<std::size_t>(lag) + 1;
    for (std::size_t s = 0; s < panel.num_securities(); ++s) {
        const auto range = panel.security_rows(s);
        for (std::size_t r = range.begin; r + ahead < range.end; ++r) fwd[r] = ret[r + ahead];
    }
    return panel.with_column(forward_return_column(lag), std::move(fwd));
}

Panel apply_universe_filter(const Panel& panel, const UniverseSpec& spec) {
    if (spec.top_k < 1) throw std::invalid_argument("universe top_k must be >= 1");
    const auto cap = panel.column(spec.cap_column);
    std::vector<std::span<const double>> flags;
    for (const auto& f : spec.exclusion_flags) flags.push_back(panel.column(f));

    std::vector<std::size_t> keep;
    std::vector<std::size_t> candidates;
    for (std::size_t d = 0; d < panel.num_dates(); ++d) {
        candidates.clear();
        for (auto r : panel.rows_on(d)) {
            if (is_missing(cap[r])) continue;
            const bool excluded = std::any_of(flags.begin(), flags.end(), [r](std::span<const double> f) {
                return !is_missing(f[r]) && f[r] != 0.0;
            });
            if (!excluded) candidates.push_back(r);
        }
        // Rows on a date are already in id order, so a stable sort on cap
        // leaves ties ordered by id.
        std::stable_sort(candidates.begin(), candidates.end(),
                         [&](std::size_t a, std::size_t b) { return cap[a] > cap[b]; });
        const std::size_t n = std::min(spec.top_k, candidates.size());
        keep.insert(keep.end(), candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n));
    }
    std::sort(keep.begin(), keep.end());
    return panel.select_rows(keep);
}

ScorePanel forward_fill_to_daily(const ScorePanel& sparse, const Panel& grid) {
    const auto& keys = sparse.keys();
    const auto values = sparse.values();
    const auto grid_dates = grid.row_dates();
    const auto key_dates = keys.row_dates();
    std::vector<double> out(grid.rows(), kMissing);
    for (std::size_t s = 0; s < grid.num_securities(); ++s) {
        const auto src = keys.find_security(grid.security_id(s));
        if (!src) continue;
        const auto src_range = keys.security_rows(*src);
        const auto grid_range = grid.security_rows(s);
        std::size_t k = src_range.begin;
        double last = kMissing;
        for (std::size_t r = grid_range.begin; r < grid_range.end; ++r) {
            while (k < src_range.end && key_dates[k] <= grid_dates[r]) {
                if (!is_missing(values[k])) last = values[k];
                ++k;
            }
            out[r] = last;
        }
    }
    return ScorePanel(grid, std::move(out));
}

} // namespace xsa
