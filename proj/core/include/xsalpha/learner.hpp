#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "xsalpha/boosting.hpp"
#include "xsalpha/panel.hpp"

namespace xsa {

/// Per date and column: subtract the cross-sectional mean and divide by the
/// population standard deviation. Zero-variance dates become 0; missing
/// values stay missing and are excluded from the moments.
Panel standardize_features(const Panel& panel, const std::vector<std::string>& feature_columns);

/// Rows of `panel` restricted to `rows`, laid out as a dense matrix.
FeatureMatrix feature_matrix(const Panel& panel, const std::vector<std::string>& feature_columns,
                             const std::vector<std::size_t>& rows);
FeatureMatrix feature_matrix(const Panel& panel, const std::vector<std::string>& feature_columns);

/// Fits on rows with a non-missing target. Throws DataError when fewer than
/// min_leaf_count such rows exist.
BoostedTrees fit_boosted_trees(const Panel& train, const std::vector<std::string>& feature_columns,
                               const std::string& target_column, const BoostParams& params);

/// One raw prediction per row of `panel`, using the model's feature names.
ScorePanel predict(const BoostedTrees& model, const Panel& panel);

enum class WindowMode { expanding, rolling };

struct WalkForwardSchedule {
    Date train_start;
    Date train_end;
    Date test_start;
    Date test_end;
    /// Number of calendar dates per refit block.
    int refit_interval = 21;
    WindowMode mode = WindowMode::expanding;
    /// Horizon of the target column (fwd_ret_lagN): the target of the row at
    /// date t is realized on the row t + lag + 1 of the same security.
    int target_lag = 0;

    /// Throws std::invalid_argument when train_end >= test_start, the
    /// windows are inverted, or refit_interval < 1.
    void validate() const;
};

struct WalkForwardBlock {
    Date test_start;
    Date test_end;
    Date train_start;
    Date train_end;
    std::size_t train_rows = 0;
    /// Training rows dropped because their target is realized on or after
    /// test_start.
    std::size_t dropped_for_leakage = 0;
    bool skipped = false;
};

struct WalkForwardResult {
    ScorePanel scores;
    std::vector<WalkForwardBlock> blocks;
    std::vector<std::string> warnings;

    std::size_t skipped_blocks() const;
};

/// Refits every `refit_interval` dates of the test window and scores only
/// the rows of that block. Blocks with too few training rows are skipped
/// with a warning and emit no scores.
WalkForwardResult run_walk_forward(const Panel& panel, const std::vector<std::string>& feature_columns,
                                   const std::string& target_column, const WalkForwardSchedule& schedule,
                                   const BoostParams& params);

} // namespace xsa
