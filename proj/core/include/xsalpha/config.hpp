#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xsalpha/analytics.hpp"
#include "xsalpha/boosting.hpp"
#include "xsalpha/frictions.hpp"
#include "xsalpha/learner.hpp"
#include "xsalpha/optimizer.hpp"
#include "xsalpha/panel_store.hpp"
#include "xsalpha/portfolio.hpp"
#include "xsalpha/synthetic.hpp"

namespace xsa {

struct DataConfig {
    /// Panel file; empty when the panel is synthesized.
    std::filesystem::path panel;
    PanelFormat format;
    std::string price_column = "close";
    /// Computed from the price column when the file lacks it.
    std::string return_column = "ret";
    std::string cap_column = "cap";
    std::string sector_column = "sector";
    CostColumns cost_columns;
    /// Optional daily factor file for attribution.
    std::filesystem::path factors;
};

struct StrategyConfig {
    std::string name;
    /// Feature names from the manifest; empty uses all of them.
    std::vector<std::string> features;
};

struct OutputConfig {
    std::filesystem::path dir = "results";
    bool markdown = true;
    bool delimited = true;
};

struct ExperimentConfig {
    std::filesystem::path source;
    std::uint64_t seed = 0;
    unsigned jobs = 0;

    DataConfig data;
    std::optional<SyntheticSpec> synthetic;
    UniverseSpec universe;
    bool universe_enabled = false;

    std::filesystem::path feature_manifest;
    bool standardize_features = true;
    std::vector<StrategyConfig> strategies;
    bool ensemble = false;
    /// Strategy the others are tested against; defaults to the first.
    std::string baseline;

    BoostParams learner;
    WalkForwardSchedule schedule;
    int horizon_lag = 1;

    PortfolioOptions portfolio;
    std::vector<int> smoothing_sweep{1, 5, 10, 21};
    CostParams costs;
    bool liquidity_enabled = true;
    LiquidityRule liquidity;

    int nw_lags = 5;
    BootstrapOptions bootstrap;
    AttributionOptions attribution;
    std::vector<int> decay_lags{0, 1, 2, 3, 5, 10};

    bool optimizer_enabled = false;
    std::vector<ConstructionVariant> optimizer_variants;
    double lambda_tc = 1.0;
    double lambda_risk = 1.0;
    RiskKind risk_kind = RiskKind::sector_factor;
    SolverOptions solver;

    OutputConfig output;
};

/// Parses YAML text. Relative paths resolve against `base_dir`. Throws
/// ConfigError on unknown keys, wrong types, or out-of-range values.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks every referenced file and column before any computation: the
/// panel header, the feature manifest (syntax, point-in-time rules, column
/// references), strategy feature names and the factor file header. Throws
/// ConfigError naming the first problem found.
void validate_config(const ExperimentConfig& config);

/// Columns the panel must provide once returns are computed.
std::vector<std::string> required_columns(const ExperimentConfig& config);

} // namespace xsa
