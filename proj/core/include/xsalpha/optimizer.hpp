#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "xsalpha/frictions.hpp"
#include "xsalpha/panel.hpp"
#include "xsalpha/portfolio.hpp"

namespace xsa {

enum class RiskKind { diagonal, sector_factor };

struct RiskParams {
    double sector_vol = 0.02;
    double sector_corr = 0.30;
    /// Share of each name's variance treated as idiosyncratic in the sector model.
    double idio_fraction = 0.5;
};

/// Sigma = B F B' + diag(d), with B one-hot sector loadings.
struct RiskModel {
    RiskKind kind = RiskKind::diagonal;
    std::vector<double> idio;
    /// Sector index per name (unused by the diagonal model).
    std::vector<std::size_t> sector;
    std::vector<std::string> sector_names;
    /// Row-major k x k sector covariance (empty for the diagonal model).
    std::vector<double> factor_cov;

    std::size_t size() const { return idio.size(); }
    std::size_t num_sectors() const { return sector_names.size(); }
    double factor(std::size_t j, std::size_t k) const { return factor_cov[j * num_sectors() + k]; }

    /// out = Sigma w, computed through f = B'w.
    void multiply(std::span<const double> w, std::span<double> out) const;
    double variance(std::span<const double> w) const;
};

inline constexpr const char* kUnclassifiedSector = "UNCLASSIFIED";

/// `sigma` are daily vols; empty sector labels map to UNCLASSIFIED. Sector
/// indices follow the sorted label order.
RiskModel build_risk_model(std::span<const double> sigma, std::span<const std::string> sectors, RiskKind kind,
                           const RiskParams& params = {});

struct OptProblem {
    std::vector<double> alpha;
    /// One-way cost per unit weight traded.
    std::vector<double> cost;
    std::vector<double> prev;
    double lambda_tc = 1.0;
    double lambda_risk = 1.0;
    double w_max = 0.02;
    bool sector_neutral = false;
    /// Sector labels for the neutrality constraint; defaults to the risk
    /// model's sectors when empty.
    std::vector<std::string> sectors;
};

struct SolverOptions {
    int max_iters = 20000;
    /// Stop when the duality gap is at most rel_tol * (1 + |objective|).
    double rel_tol = 1e-6;
};

enum class SolveStatus { optimal, max_iterations, infeasible, degenerate };

std::string_view to_string(SolveStatus s);

struct SolveResult {
    std::vector<double> weights;
    SolveStatus status = SolveStatus::optimal;
    int iterations = 0;
    /// alpha'w - lambda_tc sum c|w - prev| - lambda_risk w'Sigma w.
    double objective = 0.0;
    /// Upper bound on optimum - objective.
    double gap = 0.0;
    double long_sum_error = 0.0;
    double short_sum_error = 0.0;
    double sector_error = 0.0;
    double cap_violation = 0.0;
    std::string message;

    bool ok() const { return status == SolveStatus::optimal || status == SolveStatus::max_iterations; }
    /// One machine-readable `key=value` line.
    std::string log_line() const;
};

/// Each name is held on one side only. The solve starts from the alpha-sign
/// partition (alpha > 0 long, alpha < 0 short, zero alpha unheld), which must
/// have enough capacity or the problem is reported infeasible. Within a
/// partition the problem is convex and is solved by accelerated proximal
/// gradient with an exact proximal map. The partition is then refined: the
/// one implied by `prev` is tried, followed by sign flips suggested by the
/// linear minimizer of the split relaxation, each kept only when it raises
/// the objective. All-zero alpha returns `prev` unchanged.
SolveResult solve_portfolio(const OptProblem& problem, const RiskModel& risk, const SolverOptions& options = {});

/// Objective of an arbitrary weight vector under `problem`.
double portfolio_objective(const OptProblem& problem, const RiskModel& risk, std::span<const double> w);

struct ConcentrationMetrics {
    double effective_n = kMissing;
    double max_position = kMissing;
    double sector_tilts = kMissing;
};

ConcentrationMetrics concentration_metrics(std::span<const double> weights, std::span<const std::string> sectors);

/// Positive/negative-part normalization; throws std::invalid_argument when
/// one side is empty.
std::vector<double> naive_weights(std::span<const double> alpha);

enum class ConstructionKind { naive, sector_neutral, pure_alpha };

struct ConstructionVariant {
    ConstructionKind kind = ConstructionKind::naive;
    double w_max = 0.02;
    std::string label;
};

struct ConstructionOptions {
    PortfolioOptions portfolio;
    CostParams costs;
    RiskKind risk_kind = RiskKind::sector_factor;
    RiskParams risk;
    double lambda_tc = 1.0;
    double lambda_risk = 1.0;
    SolverOptions solver;
    std::string sector_column = "sector";
    std::string return_column = "ret";
};

struct ConstructionRow {
    std::string label;
    double net_sharpe = kMissing;
    double effective_n = kMissing;
    double max_position = kMissing;
    double sector_tilts = kMissing;
    std::size_t days = 0;
    std::size_t solver_warnings = 0;
};

/// `panel` must carry the cost input columns (compute_cost_inputs), the
/// return column paired with the scores' horizon, and a sector column of
/// numeric codes (missing codes fall into UNCLASSIFIED). Concentration
/// figures are means over rebalance days. Solver log lines are appended to
/// `log` when non-null.
std::vector<ConstructionRow> compare_constructions(const ScorePanel& raw_scores, const Panel& panel,
                                                   std::span<const ConstructionVariant> variants,
                                                   const ConstructionOptions& options,
                                                   std::vector<std::string>* log = nullptr);

/// Label for a numeric sector code ("S<code>"), UNCLASSIFIED when missing.
std::string sector_label(double code);

} // namespace xsa
