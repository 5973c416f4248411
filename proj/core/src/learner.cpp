#include "xsalpha/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "xsalpha/errors.hpp"
#include "xsalpha/parallel.hpp"

namespace xsa {

Panel standardize_features(const Panel& panel, const std::vector<std::string>& feature_columns) {
    Panel out = panel;
    for (const auto& name : feature_columns) {
        const auto x = panel.column(name);
        std::vector<double> z(x.size(), kMissing);
        parallel_for(panel.num_dates(), [&](std::size_t d) {
            const auto rows = panel.rows_on(d);
            double sum = 0.0;
            std::size_t n = 0;
            for (auto r : rows)
                if (!is_missing(x[r])) {
                    sum += x[r];
                    ++n;
                }
            if (n == 0) return;
            const double mean = sum / static_cast<double>(n);
            double ss = 0.0;
            for (auto r : rows)
                if (!is_missing(x[r])) ss += (x[r] - mean) * (x[r] - mean);
            const double sd = std::sqrt(ss / static_cast<double>(n));
            for (auto r : rows) {
                if (is_missing(x[r])) continue;
                z[r] = sd > 0.0 ? (x[r] - mean) / sd : 0.0;
            }
        });
        out = out.with_column(name, std::move(z));
    }
    return out;
}

FeatureMatrix feature_matrix(const Panel& panel, const std::vector<std::string>& feature_columns,
                             const std::vector<std::size_t>& rows) {
    FeatureMatrix m;
    m.rows = rows.size();
    m.cols = feature_columns.size();
    m.names = feature_columns;
    m.values.resize(m.rows * m.cols);
    for (std::size_t c = 0; c < m.cols; ++c) {
        const auto col = panel.column(feature_columns[c]);
        for (std::size_t i = 0; i < m.rows; ++i) m.values[i * m.cols + c] = col[rows[i]];
    }
    return m;
}

FeatureMatrix feature_matrix(const Panel& panel, const std::vector<std::string>& feature_columns) {
    std::vector<std::size_t> rows(panel.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    return feature_matrix(panel, feature_columns, rows);
}

namespace {

BoostedTrees fit_rows(const Panel& panel, const std::vector<std::string>& features, std::span<const double> target,
                      const std::vector<std::size_t>& rows, const BoostParams& params) {
    const FeatureMatrix x = feature_matrix(panel, features, rows);
    std::vector<double> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) y[i] = target[rows[i]];
    return BoostedTrees::fit(x, y, params);
}

} // namespace

BoostedTrees fit_boosted_trees(const Panel& train, const std::vector<std::string>& feature_columns,
                               const std::string& target_column, const BoostParams& params) {
    params.validate();
    for (const auto& f : feature_columns) (void)train.column(f);
    const auto target = train.column(target_column);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < train.rows(); ++r)
        if (!is_missing(target[r])) rows.push_back(r);
    if (rows.empty()) throw DataError("fit_boosted_trees: no training rows with a non-missing target");
    return fit_rows(train, feature_columns, target, rows, params);
}

ScorePanel predict(const BoostedTrees& model, const Panel& panel) {
    if (panel.rows() == 0) return ScorePanel(panel, {});
    const FeatureMatrix x = feature_matrix(panel, model.feature_names());
    return ScorePanel(panel, model.predict(x));
}

void WalkForwardSchedule::validate() const {
    if (refit_interval < 1) throw std::invalid_argument("walk-forward: refit_interval must be >= 1");
    if (train_start > train_end) throw std::invalid_argument("walk-forward: train_start is after train_end");
    if (test_start > test_end) throw std::invalid_argument("walk-forward: test_start is after test_end");
    if (train_end >= test_start)
        throw std::invalid_argument(fmt::format("walk-forward: train_end {} must precede test_start {}",
                                                format_date(train_end), format_date(test_start)));
    if (target_lag < 0) throw std::invalid_argument("walk-forward: target_lag must be >= 0");
}

std::size_t WalkForwardResult::skipped_blocks() const {
    return static_cast<std::size_t>(std::count_if(blocks.begin(), blocks.end(), [](const auto& b) { return b.skipped; }));
}

WalkForwardResult run_walk_forward(const Panel& panel, const std::vector<std::string>& feature_columns,
                                   const std::string& target_column, const WalkForwardSchedule& schedule,
                                   const BoostParams& params) {
    schedule.validate();
    params.validate();
    for (const auto& f : feature_columns) (void)panel.column(f);
    const auto target = panel.column(target_column);
    const auto cal = panel.calendar();
    const auto dates = panel.row_dates();

    const auto lower = [&](Date d) {
        return static_cast<std::size_t>(std::lower_bound(cal.begin(), cal.end(), d) - cal.begin());
    };
    const auto upper = [&](Date d) {
        return static_cast<std::size_t>(std::upper_bound(cal.begin(), cal.end(), d) - cal.begin());
    };
    const std::size_t test_lo = lower(schedule.test_start);
    const std::size_t test_hi = upper(schedule.test_end); // exclusive
    const std::size_t train_lo = lower(schedule.train_start);
    const std::size_t train_hi = upper(schedule.train_end); // exclusive

    // Date on which each row's target is realized; rows whose horizon runs
    // past the security's last observation are treated as unresolved.
    const auto horizon = static_cast<std::size_t>(schedule.target_lag) + 1;
    std::vector<Date> realized(panel.rows(), Date(std::numeric_limits<std::int32_t>::max()));
    for (std::size_t s = 0; s < panel.num_securities(); ++s) {
        const RowRange rr = panel.security_rows(s);
        for (std::size_t r = rr.begin; r + horizon < rr.end; ++r) realized[r] = dates[r + horizon];
    }

    WalkForwardResult result;
    std::vector<std::size_t> scored_rows;
    std::vector<double> scored_values;
    const auto step = static_cast<std::size_t>(schedule.refit_interval);
    for (std::size_t block_lo = test_lo, k = 0; block_lo < test_hi; block_lo += step, ++k) {
        const std::size_t block_hi = std::min(block_lo + step, test_hi);
        const std::size_t shift = k * step;
        const std::size_t win_hi = std::min(train_hi + shift, block_lo);
        const std::size_t win_lo = schedule.mode == WindowMode::rolling ? train_lo + shift : train_lo;

        WalkForwardBlock block;
        block.test_start = cal[block_lo];
        block.test_end = cal[block_hi - 1];
        if (win_lo < win_hi) {
            block.train_start = cal[win_lo];
            block.train_end = cal[win_hi - 1];
        }

        std::vector<std::size_t> train_rows;
        for (std::size_t d = win_lo; d < win_hi; ++d)
            for (auto r : panel.rows_on(d)) {
                if (is_missing(target[r])) continue;
                if (realized[r] >= block.test_start) {
                    ++block.dropped_for_leakage;
                    continue;
                }
                train_rows.push_back(r);
            }
        std::sort(train_rows.begin(), train_rows.end());
        block.train_rows = train_rows.size();

        if (train_rows.size() < static_cast<std::size_t>(params.min_leaf_count)) {
            block.skipped = true;
            result.warnings.push_back(fmt::format("block {}..{} skipped: {} training rows", format_date(block.test_start),
                                                  format_date(block.test_end), train_rows.size()));
            result.blocks.push_back(block);
            continue;
        }

        const BoostedTrees model = fit_rows(panel, feature_columns, target, train_rows, params);
        std::vector<std::size_t> test_rows;
        for (std::size_t d = block_lo; d < block_hi; ++d)
            for (auto r : panel.rows_on(d)) test_rows.push_back(r);
        std::sort(test_rows.begin(), test_rows.end());
        const auto preds = model.predict(feature_matrix(panel, feature_columns, test_rows));
        scored_rows.insert(scored_rows.end(), test_rows.begin(), test_rows.end());
        scored_values.insert(scored_values.end(), preds.begin(), preds.end());
        result.blocks.push_back(block);
    }

    std::vector<std::size_t> order(scored_rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scored_rows[a] < scored_rows[b]; });
    std::vector<std::size_t> rows(order.size());
    std::vector<double> values(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        rows[i] = scored_rows[order[i]];
        values[i] = scored_values[order[i]];
    }
    result.scores = ScorePanel(panel.select_rows(rows), std::move(values));
    return result;
}

} // namespace xsa
