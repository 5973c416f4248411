#include "xsalpha/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <unistd.h>

#include <fmt/format.h>

#include "xsalpha/errors.hpp"
#include "xsalpha/frictions.hpp"
#include "xsalpha/learner.hpp"
#include "xsalpha/optimizer.hpp"
#include "xsalpha/panel_store.hpp"
#include "xsalpha/portfolio.hpp"
#include "xsalpha/synthetic.hpp"

namespace xsa {

namespace fs = std::filesystem;

namespace {

/// Runs `f`, prefixing any error with the stage name and keeping its type.
template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    const auto msg = [&](const std::exception& e) { return fmt::format("stage '{}': {}", name, e.what()); };
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(msg(e));
    } catch (const DataError& e) {
        throw DataError(msg(e));
    } catch (const NumericError& e) {
        throw NumericError(msg(e));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(msg(e));
    } catch (const std::domain_error& e) {
        throw NumericError(msg(e));
    } catch (const std::exception& e) {
        throw std::runtime_error(msg(e));
    }
}

std::vector<std::uint8_t> tradable_mask(const ExperimentConfig& c, const Panel& panel, const ScorePanel& scores) {
    if (!c.liquidity_enabled) return {};
    return align_mask(liquidity_filter(panel, c.liquidity), panel, scores);
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return kMissing;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

struct StrategyRun {
    WeightBook book;
    ReturnSeries gross;
    NetResult net;
};

StrategyRun run_portfolio(const ExperimentConfig& c, const PreparedData& data, const ScorePanel& raw,
                          const PortfolioOptions& options) {
    StrategyRun run;
    const auto mask = tradable_mask(c, data.panel, raw);
    run.book = build_weight_book(raw, options, mask);
    run.gross = portfolio_returns(run.book, data.panel, data.target_column);
    run.net = net_returns(run.gross, run.book, data.panel, c.costs);
    return run;
}

CostSummary summarize_costs(const ExperimentConfig& c, const std::string& name, const StrategyRun& run) {
    CostSummary s;
    s.strategy = name;
    s.gross_sharpe = sharpe_or_missing(run.gross.values);
    s.gross_annual_return = kTradingDays * mean(run.gross.values);
    s.daily_turnover = mean(run.net.turnover.values);
    s.annual_turnover = kTradingDays * s.daily_turnover;
    double notional = 0.0, spread = 0.0, impact = 0.0;
    for (const auto& t : run.net.ledger) {
        const double a = std::abs(t.delta_weight);
        notional += a;
        spread += a * t.spread_bps;
        impact += a * t.impact_bps;
    }
    if (notional > 0.0) {
        s.avg_spread_bps = spread / notional;
        s.avg_impact_bps = impact / notional;
    }
    s.avg_total_bps = run.net.average_cost_bps;
    s.net_sharpe = sharpe_or_missing(run.net.net.values);
    s.net_annual_return = kTradingDays * mean(run.net.net.values);
    s.trading_days = run.gross.size();
    try {
        s.break_even_bps = break_even_cost_bps(run.gross, run.net.turnover);
    } catch (const std::domain_error&) {
    }
    s.aum = c.costs.aum;
    s.impact_k = c.costs.impact_k;
    s.fallback_trades = run.net.fallback_trades;
    return s;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
}

} // namespace

PreparedData prepare_data(const ExperimentConfig& c) {
    PreparedData data;
    stage("validate", [&] { validate_config(c); });

    Panel panel = stage("load", [&] {
        if (c.synthetic) {
            SyntheticSpec spec = *c.synthetic;
            spec.seed = c.seed;
            auto syn = generate_synthetic(spec);
            if (c.data.factors.empty()) data.factors = std::move(syn.factors);
            data.log.push_back(fmt::format("synthetic panel: {} securities x {} days", spec.n_securities, spec.n_days));
            return std::move(syn.panel);
        }
        return load_panel(c.data.panel, c.data.format);
    });
    if (!c.data.factors.empty()) data.factors = stage("load factors", [&] { return load_factor_panel(c.data.factors); });

    panel = stage("returns", [&] {
        if (panel.has_column(c.data.return_column)) return panel;
        auto lr = compute_log_returns(panel, c.data.price_column, c.data.return_column);
        if (lr.warnings > 0) data.log.push_back(fmt::format("returns: {} non-positive price pairs left missing", lr.warnings));
        return std::move(lr.panel);
    });

    data.features = fx::load_feature_manifest(c.feature_manifest);
    // Time-series operators need each security's full history, so features,
    // targets and cost inputs are computed before the universe filter.
    panel = stage("features", [&] {
        Panel p = panel;
        for (const auto& f : data.features) p = p.with_column(f.name, fx::evaluate(*f.expr, p));
        return p;
    });
    data.target_column = forward_return_column(c.horizon_lag);
    panel = stage("target", [&] { return forward_return(panel, c.horizon_lag, c.data.return_column); });
    const auto needed = required_columns(c);
    if (std::find(needed.begin(), needed.end(), c.data.cost_columns.bid) != needed.end())
        panel = stage("cost inputs", [&] { return compute_cost_inputs(panel, c.costs, c.data.cost_columns); });
    if (c.universe_enabled) panel = stage("universe", [&] { return apply_universe_filter(panel, c.universe); });
    if (c.standardize_features) {
        std::vector<std::string> cols;
        for (const auto& f : data.features) cols.push_back(f.name);
        panel = stage("standardize", [&] { return standardize_features(panel, cols); });
    }
    data.log.push_back(fmt::format("panel: {} rows, {} securities, {} dates", panel.rows(), panel.num_securities(),
                                   panel.num_dates()));
    data.panel = std::move(panel);
    return data;
}

std::vector<StrategyScores> score_strategies(const ExperimentConfig& c, const PreparedData& data,
                                             std::vector<std::string>* log) {
    std::vector<StrategyScores> out;
    for (const auto& s : c.strategies) {
        std::vector<std::string> cols = s.features;
        if (cols.empty())
            for (const auto& f : data.features) cols.push_back(f.name);
        BoostParams params = c.learner;
        params.seed = derive_seed(c.seed, "learner/" + s.name);
        auto wf = stage("learn", [&] { return run_walk_forward(data.panel, cols, data.target_column, c.schedule, params); });
        if (log) {
            for (const auto& b : wf.blocks)
                log->push_back(fmt::format("strategy={} block={}..{} train={}..{} rows={} leakage_dropped={}{}", s.name,
                                           format_date(b.test_start), format_date(b.test_end),
                                           format_date(b.train_start), format_date(b.train_end), b.train_rows,
                                           b.dropped_for_leakage, b.skipped ? " skipped" : ""));
            for (const auto& w : wf.warnings) log->push_back(fmt::format("strategy={} warning: {}", s.name, w));
        }
        if (wf.scores.empty())
            throw DataError(fmt::format("stage 'learn': strategy '{}' produced no out-of-sample scores", s.name));
        out.push_back({s.name, cols.size(), std::move(wf.scores)});
    }
    if (c.ensemble && !out.empty()) {
        std::vector<ScorePanel> parts;
        std::size_t nf = 0;
        for (const auto& s : out) {
            parts.push_back(standardize_and_winsorize(s.raw, c.portfolio.winsor_clip));
            nf += s.n_features;
        }
        out.push_back({"Ensemble", nf, stage("ensemble", [&] { return ensemble_scores(parts); })});
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& c, ExperimentScope scope) {
    ExperimentResult result;
    result.output_dir = c.output.dir;
    std::vector<std::string> log;

    PreparedData data = prepare_data(c);
    log.insert(log.end(), data.log.begin(), data.log.end());
    const auto strategies = score_strategies(c, data, &log);

    // With no strategies the per-strategy tables are written with headers only.
    const bool any = !strategies.empty();
    std::size_t primary = any ? strategies.size() - 1 : 0;
    std::size_t baseline = 0;
    if (!c.baseline.empty())
        for (std::size_t i = 0; i < strategies.size(); ++i)
            if (strategies[i].name == c.baseline) baseline = i;
    if (!c.ensemble) primary = baseline;

    auto& tables = result.tables;
    std::vector<StrategyRun> runs;
    if (scope == ExperimentScope::full) {
        std::vector<PerfReport> reports;
        std::vector<std::size_t> counts;
        std::vector<ReturnSeries> gross;
        std::vector<std::string> names;
        for (const auto& s : strategies) {
            runs.push_back(stage("portfolio", [&] { return run_portfolio(c, data, s.raw, c.portfolio); }));
            const auto ic = stage("analytics", [&] { return spearman_ic(s.raw, data.panel, data.target_column); });
            reports.push_back(perf_report(s.name, runs.back().gross, &ic));
            counts.push_back(s.n_features);
            gross.push_back(runs.back().gross);
            names.push_back(s.name);
            log.push_back(fmt::format("strategy={} days={} flagged_days={} missing_return_terms={}", s.name,
                                      runs.back().gross.size(), runs.back().book.flagged_days(),
                                      runs.back().gross.missing_terms));
        }
        tables.push_back(panel_a(reports));
        tables.push_back(panel_b(reports, counts));
        tables.push_back(panel_c(names, strategy_correlations(gross)));

        std::vector<InferenceRow> inference;
        for (std::size_t i = 0; i < strategies.size(); ++i) {
            InferenceRow row;
            row.strategy = strategies[i].name;
            if (i != baseline) {
                row.baseline = strategies[baseline].name;
                try {
                    row.test = nw_mean_diff_test(gross[i], gross[baseline], c.nw_lags);
                    row.tested = true;
                } catch (const DataError& e) {
                    log.push_back(fmt::format("inference: {} vs {}: {}", row.strategy, row.baseline, e.what()));
                }
            }
            BootstrapOptions bo = c.bootstrap;
            bo.seed = derive_seed(c.seed, "bootstrap/" + strategies[i].name);
            if (gross[i].size() >= 2)
                row.sharpe_ci = stage("inference", [&] {
                    return stationary_bootstrap_ci(gross[i].values, [](std::span<const double> x) { return sharpe_or_missing(x); }, bo);
                });
            inference.push_back(std::move(row));
        }
        tables.push_back(inference_table(inference, c.bootstrap.level, c.nw_lags));

        if (any) tables.push_back(cost_table(summarize_costs(c, strategies[primary].name, runs[primary])));

        std::vector<SmoothingRow> sweep;
        for (int w : any ? c.smoothing_sweep : std::vector<int>{}) {
            PortfolioOptions po = c.portfolio;
            po.smoothing_window = w;
            const auto run = stage("smoothing", [&] { return run_portfolio(c, data, strategies[primary].raw, po); });
            SmoothingRow r;
            r.window = w;
            r.daily_turnover = mean(run.net.turnover.values);
            r.annual_turnover = kTradingDays * r.daily_turnover;
            r.total_cost_bps = run.net.average_cost_bps;
            r.gross_sharpe = sharpe_or_missing(run.gross.values);
            r.net_sharpe = sharpe_or_missing(run.net.net.values);
            sweep.push_back(r);
        }
        tables.push_back(smoothing_table(sweep));
    }

    if (scope != ExperimentScope::optimizer) {
        std::vector<std::pair<std::string, std::vector<DecayRow>>> decay;
        for (const auto& s : strategies)
            decay.emplace_back(s.name, stage("decay", [&] {
                                   return alpha_decay(s.raw, data.panel, c.decay_lags, c.portfolio, c.data.return_column);
                               }));
        tables.push_back(decay_table(decay, c.decay_lags));
    }

    if (scope == ExperimentScope::full) {
        if (data.factors) {
            std::vector<std::pair<std::string, FactorRegression>> rows;
            for (std::size_t i = 0; i < strategies.size(); ++i) {
                try {
                    rows.emplace_back(strategies[i].name, factor_attribution(runs[i].gross, *data.factors, c.attribution));
                } catch (const std::exception& e) {
                    log.push_back(fmt::format("attribution: {}: {}", strategies[i].name, e.what()));
                }
            }
            tables.push_back(attribution_table(rows));
        }
        if (data.panel.has_column(c.data.cap_column)) {
            std::vector<std::pair<std::string, std::vector<SegmentRow>>> rows;
            for (const auto& s : strategies)
                rows.emplace_back(s.name, stage("segments", [&] {
                                      return cap_segment_report(s.raw, data.panel, c.data.cap_column,
                                                                data.target_column, c.portfolio);
                                  }));
            tables.push_back(segment_table(rows));
        }
    }

    if (any && ((scope == ExperimentScope::full && c.optimizer_enabled) || scope == ExperimentScope::optimizer)) {
        ConstructionOptions opts;
        opts.portfolio = c.portfolio;
        opts.costs = c.costs;
        opts.risk_kind = c.risk_kind;
        opts.lambda_tc = c.lambda_tc;
        opts.lambda_risk = c.lambda_risk;
        opts.solver = c.solver;
        opts.sector_column = c.data.sector_column;
        opts.return_column = data.target_column;
        auto variants = c.optimizer_variants;
        if (variants.empty()) variants.push_back({ConstructionKind::naive, 1.0, "Naive (prediction-weighted)"});
        const auto rows = stage("optimizer", [&] {
            return compare_constructions(strategies[primary].raw, data.panel, variants, opts, &log);
        });
        auto t = optimizer_table(rows);
        t.notes.push_back(fmt::format("Strategy: {}.", strategies[primary].name));
        tables.push_back(std::move(t));
    }

    // Stage everything next to the destination so the final move is a rename.
    const fs::path out = c.output.dir;
    const fs::path parent = out.has_parent_path() ? out.parent_path() : fs::path(".");
    const fs::path tmp = parent / fmt::format(".{}.tmp-{}", out.filename().string(), ::getpid());
    try {
        stage("write", [&] {
            fs::remove_all(tmp);
            fs::create_directories(tmp);
            emit_report(tables, tmp, {c.output.markdown, c.output.delimited});
            if (scope == ExperimentScope::full && any) {
                std::ofstream w(tmp / "weights.csv", std::ios::binary);
                write_weight_book(w, runs[primary].book);
                std::ofstream t(tmp / "trades.csv", std::ios::binary);
                write_trade_ledger(t, runs[primary].net.ledger);
                if (!w || !t) throw DataError("cannot write weights or trades");
            }
            std::string text;
            for (const auto& line : log) text += line + "\n";
            write_text(tmp / "run.log", text);
            if (fs::exists(out)) fs::remove_all(out);
            fs::rename(tmp, out);
        });
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
    return result;
}

} // namespace xsa
