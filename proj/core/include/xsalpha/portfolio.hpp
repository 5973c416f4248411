#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xsalpha/panel.hpp"
#include "xsalpha/types.hpp"

namespace xsa {

/// Per date z-score with the population standard deviation, clamped to
/// [-clip, clip]. Dates with zero variance map to 0; missing stays missing.
ScorePanel standardize_and_winsorize(const ScorePanel& scores, double clip = 3.0);

/// Positive part over its sum minus negative part over its sum. Returns
/// nullopt when either side is empty. Missing entries get weight 0.
std::optional<std::vector<double>> long_short_weights(std::span<const double> alpha);

/// Per-date weights over a fixed security universe.
struct WeightBook {
    struct Day {
        Date date;
        /// Indices into `universe`, increasing.
        std::vector<std::uint32_t> securities;
        std::vector<double> weights;
        /// Set when one side of the book was empty and no weights were formed.
        bool flagged = false;
        /// False on days that carry the previous rebalance's weights.
        bool rebalanced = true;
    };

    std::shared_ptr<const std::vector<std::string>> universe;
    std::vector<Day> days;

    std::size_t flagged_days() const;
};

/// One day per calendar date of the score panel.
WeightBook weights_from_scores(const ScorePanel& alpha_tilde);

/// Trailing mean over each security's last `window` rows, skipping missing
/// values (at least one present value required).
ScorePanel smooth_scores(const ScorePanel& scores, int window);

/// Equal-weight mean per (security, date) over the inputs that have a value
/// there, keyed on the union of input keys. Throws on an empty list.
ScorePanel ensemble_scores(std::span<const ScorePanel> inputs);

/// R_t = sum_i w_{i,t} r_{i,t} where r is `return_column` of `panel` on the
/// same (security, date). Terms with a missing return are dropped and counted
/// in `missing_terms`. Flagged days contribute a zero return.
ReturnSeries portfolio_returns(const WeightBook& book, const Panel& panel, std::string_view return_column);

enum class RebalanceFrequency { daily, weekly, monthly };

std::optional<RebalanceFrequency> parse_rebalance_frequency(std::string_view text);
std::string_view to_string(RebalanceFrequency f);

/// Recomputed weights are kept only on the first date of each period; the
/// remaining dates carry them unchanged.
WeightBook hold_between_rebalances(const WeightBook& book, RebalanceFrequency frequency);

struct PortfolioOptions {
    /// 1 disables smoothing.
    int smoothing_window = 1;
    double winsor_clip = 3.0;
    RebalanceFrequency rebalance = RebalanceFrequency::daily;
};

/// smooth -> (drop untradable rows) -> standardize/winsorize -> weights ->
/// hold. `tradable`, when non-empty, has one entry per score row.
WeightBook build_weight_book(const ScorePanel& raw_scores, const PortfolioOptions& options,
                             std::span<const std::uint8_t> tradable = {});

/// Delimited text with header `date,id,weight`.
void write_weight_book(std::ostream& out, const WeightBook& book, char delimiter = ',');

} // namespace xsa
