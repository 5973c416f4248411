#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xsalpha/analytics.hpp"
#include "xsalpha/config.hpp"
#include "xsalpha/feature_dsl.hpp"
#include "xsalpha/panel.hpp"
#include "xsalpha/report.hpp"

namespace xsa {

/// Panel after loading, returns, features, target, cost inputs and the
/// universe filter, in that order.
struct PreparedData {
    Panel panel;
    std::vector<fx::FeatureDef> features;
    std::string target_column;
    std::optional<FactorPanel> factors;
    std::vector<std::string> log;
};

PreparedData prepare_data(const ExperimentConfig& config);

struct StrategyScores {
    std::string name;
    std::size_t n_features = 0;
    /// Out-of-sample predictions over the test window.
    ScorePanel raw;
};

/// Walk-forward scores per configured strategy, plus the ensemble when on.
std::vector<StrategyScores> score_strategies(const ExperimentConfig& config, const PreparedData& data,
                                             std::vector<std::string>* log = nullptr);

enum class ExperimentScope { full, decay, optimizer };

struct ExperimentResult {
    std::vector<Table> tables;
    std::filesystem::path output_dir;
};

/// Runs the pipeline and writes tables, the primary strategy's weights and
/// trade ledger, and `run.log` into the output directory. Outputs are
/// staged in a sibling temporary directory and moved into place only on
/// success; an existing output directory is replaced. Errors carry the
/// failing stage name and keep their type.
ExperimentResult run_experiment(const ExperimentConfig& config, ExperimentScope scope = ExperimentScope::full);

} // namespace xsa
