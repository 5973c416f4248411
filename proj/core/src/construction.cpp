#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "xsalpha/analytics.hpp"
#include "xsalpha/optimizer.hpp"

namespace xsa {

std::string sector_label(double code) {
    if (is_missing(code)) return kUnclassifiedSector;
    return fmt::format("S{}", format_double(code));
}

namespace {

struct DayInputs {
    std::vector<std::uint32_t> securities; // universe indices
    std::vector<double> alpha;
    std::vector<double> cost;
    std::vector<double> sigma;
    std::vector<std::string> sector;
};

} // namespace

std::vector<ConstructionRow> compare_constructions(const ScorePanel& raw_scores, const Panel& panel,
                                                   std::span<const ConstructionVariant> variants,
                                                   const ConstructionOptions& options, std::vector<std::string>* log) {
    const auto mask = align_mask(liquidity_filter(panel), panel, raw_scores);
    const Panel& keys = raw_scores.keys();
    const auto sec = keys.row_security();
    std::vector<std::optional<std::size_t>> to_panel;
    for (const auto& id : keys.securities()) to_panel.push_back(panel.find_security(id));

    const auto hs = panel.column("half_spread");
    const auto sigma = panel.column("sigma");
    const auto adv = panel.column("adv");
    const bool has_sector = panel.has_column(options.sector_column);
    const auto sector_col = has_sector ? panel.column(options.sector_column) : std::span<const double>{};

    // Standardized, winsorized alpha on tradable names.
    ScorePanel smoothed = smooth_scores(raw_scores, options.portfolio.smoothing_window);
    {
        std::vector<double> v(smoothed.values().begin(), smoothed.values().end());
        for (std::size_t r = 0; r < v.size(); ++r)
            if (!mask[r]) v[r] = kMissing;
        smoothed = smoothed.with_values(std::move(v));
    }
    const ScorePanel alpha = standardize_and_winsorize(smoothed, options.portfolio.winsor_clip);
    const auto a = alpha.values();

    const auto universe = keys.security_table();
    std::vector<std::string> sector_of_security(keys.num_securities(), kUnclassifiedSector);

    std::vector<DayInputs> days(keys.num_dates());
    for (std::size_t d = 0; d < keys.num_dates(); ++d) {
        const Date date = keys.calendar()[d];
        auto& in = days[d];
        for (auto r : keys.rows_on(d)) {
            if (is_missing(a[r])) continue;
            in.securities.push_back(sec[r]);
            in.alpha.push_back(a[r]);
        }
        const double n = static_cast<double>(in.securities.size());
        for (auto s : in.securities) {
            const auto row = to_panel[s] ? panel.find_row(*to_panel[s], date) : std::nullopt;
            double c = kMissing, sg = kMissing;
            std::string label = kUnclassifiedSector;
            if (row) {
                sg = sigma[*row];
                const double im = n > 0 ? impact_cost(options.costs, sigma[*row], options.costs.aum / n, adv[*row]) : kMissing;
                if (!is_missing(hs[*row]) && !is_missing(im)) c = hs[*row] + im;
                if (has_sector) label = sector_label(sector_col[*row]);
            }
            if (is_missing(c)) c = options.costs.static_cost_bps * 1e-4;
            in.cost.push_back(c);
            in.sigma.push_back(sg);
            in.sector.push_back(label);
            sector_of_security[s] = label;
        }
    }

    auto sectors_for = [&](const WeightBook::Day& day) {
        std::vector<std::string> out;
        for (auto s : day.securities) out.push_back(sector_of_security[s]);
        return out;
    };

    std::vector<ConstructionRow> rows;
    for (const auto& variant : variants) {
        ConstructionRow row;
        row.label = variant.label;
        WeightBook book;
        if (variant.kind == ConstructionKind::naive) {
            book = build_weight_book(raw_scores, options.portfolio, mask);
        } else {
            WeightBook daily;
            daily.universe = universe;
            daily.days.resize(keys.num_dates());
            std::vector<double> held(keys.num_securities(), 0.0);
            std::optional<std::int32_t> period;
            for (std::size_t d = 0; d < keys.num_dates(); ++d) {
                const Date date = keys.calendar()[d];
                auto& day = daily.days[d];
                day.date = date;
                std::int32_t key = static_cast<std::int32_t>(d);
                if (options.portfolio.rebalance == RebalanceFrequency::weekly) key = date.week_index();
                if (options.portfolio.rebalance == RebalanceFrequency::monthly) key = date.month_index();
                const bool rebalance = !period || *period != key;
                period = key;
                if (rebalance) {
                    const auto& in = days[d];
                    OptProblem p;
                    p.alpha = in.alpha;
                    p.cost = in.cost;
                    for (auto s : in.securities) p.prev.push_back(held[s]);
                    p.lambda_tc = options.lambda_tc;
                    p.lambda_risk = options.lambda_risk;
                    p.w_max = variant.w_max;
                    p.sector_neutral = variant.kind == ConstructionKind::sector_neutral;
                    p.sectors = in.sector;
                    const RiskModel risk = build_risk_model(in.sigma, in.sector, options.risk_kind, options.risk);
                    SolveResult sol;
                    if (!in.securities.empty()) sol = solve_portfolio(p, risk, options.solver);
                    else sol.status = SolveStatus::infeasible;
                    if (log)
                        log->push_back(fmt::format("variant={} date={} n={} {}", variant.label, format_date(date),
                                                   in.securities.size(), sol.log_line()));
                    if (sol.status == SolveStatus::max_iterations) ++row.solver_warnings;
                    std::fill(held.begin(), held.end(), 0.0);
                    if (sol.status == SolveStatus::infeasible) {
                        day.flagged = true;
                        ++row.solver_warnings;
                    } else {
                        for (std::size_t k = 0; k < in.securities.size(); ++k) {
                            if (sol.weights[k] == 0.0) continue;
                            day.securities.push_back(in.securities[k]);
                            day.weights.push_back(sol.weights[k]);
                            held[in.securities[k]] = sol.weights[k];
                        }
                        // Keep the security order increasing for the book.
                        std::vector<std::size_t> order(day.securities.size());
                        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
                        std::sort(order.begin(), order.end(),
                                  [&](std::size_t x, std::size_t y) { return day.securities[x] < day.securities[y]; });
                        WeightBook::Day sorted;
                        sorted.date = date;
                        for (auto k : order) {
                            sorted.securities.push_back(day.securities[k]);
                            sorted.weights.push_back(day.weights[k]);
                        }
                        day = std::move(sorted);
                    }
                } else {
                    day.securities = daily.days[d - 1].securities;
                    day.weights = daily.days[d - 1].weights;
                    day.flagged = daily.days[d - 1].flagged;
                    day.rebalanced = false;
                }
            }
            book = std::move(daily);
        }

        const ReturnSeries gross = portfolio_returns(book, panel, options.return_column);
        const NetResult net = net_returns(gross, book, panel, options.costs);
        row.net_sharpe = sharpe_or_missing(net.net.values);
        row.days = net.net.size();

        double en = 0.0, mp = 0.0, st = 0.0;
        std::size_t count = 0;
        for (const auto& day : book.days) {
            if (!day.rebalanced || day.flagged || day.weights.empty()) continue;
            const auto m = concentration_metrics(day.weights, sectors_for(day));
            en += m.effective_n;
            mp += m.max_position;
            st += m.sector_tilts;
            ++count;
        }
        if (count > 0) {
            row.effective_n = en / static_cast<double>(count);
            row.max_position = mp / static_cast<double>(count);
            row.sector_tilts = st / static_cast<double>(count);
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace xsa
