#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xsalpha/feature_expr.hpp"
#include "xsalpha/panel.hpp"

namespace xsa::fx {

/// Syntax error with a 1-based source position.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& message, std::size_t line, std::size_t column);
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

  private:
    std::size_t line_;
    std::size_t column_;
};

/// Parses the feature grammar documented in docs/feature_grammar.md.
ExprPtr parse_feature(std::string_view text);

struct Violation {
    /// Node path from the root, e.g. `$.arg.lhs`.
    std::string path;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool passed() const { return violations.empty(); }
};

/// Static point-in-time check: non-negative lags, windows >= 1,
/// 1 <= min_periods <= window, span >= 1, ddof in {0, 1}, eps >= 0.
ValidationReport check_point_in_time(const Expr& expr);
/// Additionally requires every referenced column to be in `declared_columns`.
ValidationReport check_point_in_time(const Expr& expr, std::span<const std::string> declared_columns);

/// Evaluates over every panel row. Throws std::invalid_argument when the
/// static check fails and DataError when a referenced column is absent.
std::vector<double> evaluate(const Expr& expr, const Panel& panel);

/// Named feature read from a manifest.
struct FeatureDef {
    std::string name;
    std::string text;
    ExprPtr expr;
};

/// Manifest format: one `name = expression` per line; `#` starts a comment;
/// a line ending in `\` continues on the next line.
std::vector<FeatureDef> parse_feature_manifest(std::string_view text);
std::vector<FeatureDef> load_feature_manifest(const std::filesystem::path& path);

/// Syntactic classification results over a feature corpus.
struct PatternStats {
    std::size_t features = 0;
    /// Node count excluding column references and constants.
    std::vector<std::size_t> operation_counts;
    double mean_operations = 0.0;
    double median_operations = 0.0;

    double cross_sectional_ranking = 0.0;
    double regime_normalization = 0.0;
    double variable_interactions = 0.0;
    double multi_timeframe = 0.0;
    double outlier_zscoring = 0.0;
    double momentum_adjustment = 0.0;

    /// Window-specification fractions over buckets "5", "10", "20-21",
    /// "60", "other". Empty when no windows are used.
    std::map<std::string, double> window_histogram;
    std::size_t window_specs = 0;
};

/// Per-feature pattern flags; see docs/feature_grammar.md for the rules.
struct PatternFlags {
    std::size_t operations = 0;
    bool cross_sectional_ranking = false;
    bool regime_normalization = false;
    bool variable_interactions = false;
    bool multi_timeframe = false;
    bool outlier_zscoring = false;
    bool momentum_adjustment = false;
    std::vector<std::int64_t> windows;
};

PatternFlags classify_feature(const Expr& expr);

/// Throws std::invalid_argument on an empty corpus.
PatternStats analyze_patterns(std::span<const ExprPtr> corpus);

} // namespace xsa::fx
