// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <unistd.h>

#include "oracles.hpp"
#include "random_expr.hpp"
#include "xsalpha/analytics.hpp"
#include "xsalpha/config.hpp"
#include "xsalpha/experiment.hpp"
#include "xsalpha/feature_dsl.hpp"
#include "xsalpha/frictions.hpp"
#include "xsalpha/optimizer.hpp"
#include "xsalpha/panel_store.hpp"
#include "xsalpha/parallel.hpp"
#include "xsalpha/portfolio.hpp"
#include "xsalpha/report.hpp"
#include "xsalpha/synthetic.hpp"

namespace fs = std::filesystem;
using namespace xsa;

namespace {

using Clock = std::chrono::steady_clock;
using Vec = std::vector<double>;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

// 1. Weight map: dollar neutral, gross 2.
Outcome weight_map() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_net = 0.0, worst_gross = 0.0;
    std::size_t emitted = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 2 + static_cast<std::size_t>(u(rng) * 499);
        Vec v(n);
        for (auto& x : v) {
            x = g(rng) * std::exp(2.0 * g(rng));
            if (u(rng) < 0.05) x = oracle::nan();
            if (u(rng) < 0.05) x = std::round(x);
        }
        const auto keys = oracle::dense_panel(n, 1, {}, [](std::size_t, std::size_t, std::size_t) { return 0.0; });
        const auto book = build_weight_book(ScorePanel(keys, v), PortfolioOptions{});
        for (const auto& d : book.days) {
            if (d.flagged) continue;
            ++emitted;
            double net = 0.0, gross = 0.0;
            for (double w : d.weights) {
                net += w;
                gross += std::abs(w);
            }
            worst_net = std::max(worst_net, std::abs(net));
            worst_gross = std::max(worst_gross, std::abs(gross - 2.0));
        }
    }
    const double secs = seconds_since(t0);
    return {worst_net <= 1e-10 && worst_gross <= 1e-10 && emitted > 900 && secs < 5.0,
            fmt::format("{} dates, max|sum w| {:.2e}, max|gross-2| {:.2e}, {:.2f}s", emitted, worst_net, worst_gross,
                        secs)};
}

// 2. IC against the quadratic concordance oracle.
Outcome ic_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n_dates = 200, universe = 500;
    const auto cal = oracle::days(n_dates);
    PanelBuilder b({"s", "r"});
    std::vector<std::vector<std::pair<double, double>>> by_date(n_dates);
    for (std::size_t t = 0; t < n_dates; ++t) {
        const std::size_t n = 3 + static_cast<std::size_t>(u(rng) * (universe - 2));
        const bool coarse = t % 4 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = g(rng), r = 0.3 * s + g(rng);
            if (coarse) {
                s = std::round(s * 2.0);
                r = std::round(r * 2.0);
            }
            if (u(rng) < 0.03) s = oracle::nan();
            if (u(rng) < 0.03) r = oracle::nan();
            b.add_row(oracle::sec_id(i), cal[t], {s, r});
            by_date[t].emplace_back(s, r);
        }
    }
    const auto panel = std::move(b).build();
    const auto ic = spearman_ic(ScorePanel::from_column(panel, "s"), panel, "r");
    double worst = 0.0;
    std::size_t matched = 0;
    for (std::size_t k = 0; k < ic.dates.size(); ++k) {
        const auto t = static_cast<std::size_t>(ic.dates[k].ordinal() - cal[0].ordinal());
        Vec s, r;
        for (const auto& [a, c] : by_date[t]) {
            s.push_back(a);
            r.push_back(c);
        }
        worst = std::max(worst, std::abs(ic.values[k] - oracle::spearman(s, r)));
        ++matched;
    }
    const double secs = seconds_since(t0);
    return {matched == n_dates && worst <= 1e-12 && secs < 30.0,
            fmt::format("{} dates, max diff {:.2e}, {:.2f}s", matched, worst, secs)};
}

// 3. Leakage: future perturbations never change past outputs; negative lags rejected.
Outcome leakage() {
    const auto t0 = Clock::now();
    const std::vector<std::string> cols{"a", "b", "c"};
    const std::size_t n = 6, T = 40;
    std::mt19937_64 rng(303);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto base = oracle::dense_panel(n, T, cols, [&](std::size_t, std::size_t, std::size_t) {
        return u(rng) < 0.05 ? oracle::nan() : 1.0 + g(rng);
    });
    const auto dates = base.row_date_index();

    oracle::ExprGen gen(3030, cols);
    std::size_t checked = 0, changed = 0, rejected_ok = 0, rejected_bad = 0;
    for (int e = 0; e < 100; ++e) {
        const auto expr = gen(4);
        if (!fx::check_point_in_time(*expr).passed()) {
            ++rejected_bad;
            continue;
        }
        const Vec ref = fx::evaluate(*expr, base);
        for (int p = 0; p < 1000; ++p) {
            const auto cut = static_cast<std::uint32_t>(u(rng) * (T - 1));
            Panel pert = base;
            for (const auto& c : cols) {
                const auto src = base.column(c);
                Vec v(src.begin(), src.end());
                for (std::size_t r = 0; r < v.size(); ++r)
                    if (dates[r] > cut && u(rng) < 0.7) v[r] = u(rng) < 0.1 ? oracle::nan() : 50.0 * g(rng);
                pert = pert.with_column(c, std::move(v));
            }
            const Vec out = fx::evaluate(*expr, pert);
            for (std::size_t r = 0; r < out.size(); ++r)
                if (dates[r] <= cut && !same(out[r], ref[r])) {
                    ++changed;
                    break;
                }
            ++checked;
        }
    }
    for (int k = 1; k <= 50; ++k) {
        auto bad = fx::lag(gen(2), -(1 + k % 5));
        if (k % 3 == 1) bad = fx::cs_rank(bad);
        if (k % 3 == 2) bad = fx::binary(fx::BinaryOp::add, gen(2), fx::rolling(fx::RollingKind::mean, bad, 5, 1));
        bool threw = false;
        try {
            fx::evaluate(*bad, base);
        } catch (const std::invalid_argument&) {
            threw = true;
        }
        if (!fx::check_point_in_time(*bad).passed() && threw) ++rejected_ok;
    }
    const bool parsed_rejected = !fx::check_point_in_time(*fx::parse_feature("lag(col(a), -1)")).passed();
    const double secs = seconds_since(t0);
    return {checked == 100000 && changed == 0 && rejected_bad == 0 && rejected_ok == 50 && parsed_rejected &&
                secs < 120.0,
            fmt::format("{} perturbations, {} changed outputs, {}/50 negative lags rejected, {:.1f}s", checked, changed,
                        rejected_ok, secs)};
}

// Hand-coded time-series helpers for the feature corpus; pandas-style
// windows over present values.
Vec roll_mean(const Vec& x, std::size_t w, std::size_t minp) {
    Vec out(x.size(), oracle::nan());
    for (std::size_t t = 0; t < x.size(); ++t) {
        double s = 0.0;
        std::size_t c = 0;
        for (std::size_t k = (t + 1 >= w ? t + 1 - w : 0); k <= t; ++k)
            if (!std::isnan(x[k])) {
                s += x[k];
                ++c;
            }
        if (c >= minp && c > 0) out[t] = s / static_cast<double>(c);
    }
    return out;
}

Vec roll_std(const Vec& x, std::size_t w, std::size_t minp, int ddof) {
    Vec out(x.size(), oracle::nan());
    for (std::size_t t = 0; t < x.size(); ++t) {
        Vec v;
        for (std::size_t k = (t + 1 >= w ? t + 1 - w : 0); k <= t; ++k)
            if (!std::isnan(x[k])) v.push_back(x[k]);
        if (v.size() < minp || static_cast<int>(v.size()) - ddof <= 0) continue;
        const double m = oracle::mean(v);
        double ss = 0.0;
        for (double a : v) ss += (a - m) * (a - m);
        out[t] = std::sqrt(ss / static_cast<double>(static_cast<int>(v.size()) - ddof));
    }
    return out;
}

Vec ewm(const Vec& x, double span) {
    const double a = 2.0 / (span + 1.0);
    Vec out(x.size(), oracle::nan());
    double s = oracle::nan();
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (!std::isnan(x[t])) s = std::isnan(s) ? x[t] : a * x[t] + (1.0 - a) * s;
        out[t] = s;
    }
    return out;
}

double safe_div(double a, double b) { return std::isnan(a) || std::isnan(b) || b == 0.0 ? oracle::nan() : a / b; }

Vec zip(const Vec& a, const Vec& b, const std::function<double(double, double)>& f) {
    Vec out(a.size());
    for (std::size_t t = 0; t < a.size(); ++t) out[t] = f(a[t], b[t]);
    return out;
}

Vec ts_z(const Vec& x, std::size_t w, double eps) {
    const Vec m = roll_mean(x, w, w), sd = roll_std(x, w, w, 1);
    Vec out(x.size(), oracle::nan());
    for (std::size_t t = 0; t < x.size(); ++t)
        if (!std::isnan(x[t]) && !std::isnan(m[t])) out[t] = safe_div(x[t] - m[t], sd[t] + eps);
    return out;
}

// 4. The five showcase features against hand-coded implementations.
Outcome feature_corpus() {
    const std::size_t n = 20, T = 100;
    const std::vector<std::string> cols{"truebeat_eps_fq6", "truebeat_sal_fq6", "close", "prev_midpoint", "returns",
                                        "adcallvolume", "putcallgammaimbalanceratio", "number_of_analysts_fq1",
                                        "truebeat_sal_fq1"};
    std::mt19937_64 rng(404);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // raw[c][i][t]
    std::vector<std::vector<Vec>> raw(cols.size(), std::vector<Vec>(n, Vec(T)));
    for (std::size_t i = 0; i < n; ++i) {
        double px = 50.0 + 10.0 * u(rng);
        for (std::size_t t = 0; t < T; ++t) {
            const double r = 0.02 * g(rng);
            const double prev = px;
            px *= std::exp(r);
            raw[0][i][t] = g(rng);
            raw[1][i][t] = g(rng);
            raw[2][i][t] = px;
            raw[3][i][t] = prev * (1.0 + 0.002 * g(rng));
            raw[4][i][t] = r;
            raw[5][i][t] = 1e4 * std::exp(g(rng));
            raw[6][i][t] = 1.0 + 0.5 * g(rng);
            raw[7][i][t] = std::floor(1.0 + 20.0 * u(rng));
            raw[8][i][t] = g(rng);
            for (std::size_t c = 0; c < cols.size(); ++c)
                if (c != 2 && u(rng) < 0.02) raw[c][i][t] = oracle::nan();
        }
    }
    const auto panel = oracle::dense_panel(n, T, cols, [&](std::size_t c, std::size_t i, std::size_t t) { return raw[c][i][t]; });

    auto rank_dates = [&](const std::vector<Vec>& per_sec) {
        std::vector<Vec> out(n, Vec(T));
        for (std::size_t t = 0; t < T; ++t) {
            Vec x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = per_sec[i][t];
            const Vec r = oracle::pct_rank(x);
            for (std::size_t i = 0; i < n; ++i) out[i][t] = r[i];
        }
        return out;
    };
    const auto mul = [](double a, double b) { return a * b; };
    const auto sub = [](double a, double b) { return a - b; };

    std::vector<std::vector<Vec>> want(5, std::vector<Vec>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& x = [&](std::size_t c) -> const Vec& { return raw[c][i]; };
        want[0][i] = zip(x(0), x(1), mul);
        const Vec gap = zip(zip(x(2), x(3), sub), roll_std(x(4), 21, 21, 1), safe_div);
        want[1][i] = ts_z(zip(ewm(gap, 5), roll_mean(gap, 21, 21), sub), 21, 1e-8);
        want[2][i] = zip(roll_mean(x(5), 5, 1), roll_std(x(5), 20, 1, 1), safe_div);
        want[3][i] = zip(roll_mean(x(6), 10, 1), roll_std(x(6), 10, 1, 0), safe_div);
        want[4][i] = roll_mean(zip(x(7), x(8), mul), 30, 10);
    }
    for (auto& f : want) f = rank_dates(f);
    for (auto& row : want[0])
        for (auto& v : row)
            if (std::isnan(v)) v = 0.0;

    const auto defs = fx::load_feature_manifest(fs::path(XSALPHA_SOURCE_DIR) / "data/features/showcase.txt");
    if (defs.size() != 5) return {false, fmt::format("showcase manifest has {} features", defs.size())};
    double worst = 0.0;
    std::size_t present = 0, mismatched_missing = 0;
    for (std::size_t f = 0; f < 5; ++f) {
        const Vec got = fx::evaluate(*defs[f].expr, panel);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t t = 0; t < T; ++t) {
                const double a = got[i * T + t], b = want[f][i][t];
                if (std::isnan(a) != std::isnan(b)) {
                    ++mismatched_missing;
                } else if (!std::isnan(a)) {
                    worst = std::max(worst, std::abs(a - b));
                    ++present;
                }
            }
    }
    return {worst <= 1e-10 && mismatched_missing == 0 && present > 5 * n * 30,
            fmt::format("{} present cells, max diff {:.2e}, {} missing-pattern mismatches", present, worst,
                        mismatched_missing)};
}

// 5. Ranking prevalence over the corpus.
Outcome pattern_ranking() {
    std::vector<fx::ExprPtr> corpus;
    for (const auto& d : fx::load_feature_manifest(fs::path(XSALPHA_SOURCE_DIR) / "data/features/showcase.txt"))
        corpus.push_back(d.expr);
    const auto stats = fx::analyze_patterns(corpus);
    return {stats.features == 5 && stats.cross_sectional_ranking == 1.0,
            fmt::format("{} features, ranking {:.0f}%", stats.features, 100.0 * stats.cross_sectional_ranking)};
}

// 6. Cost arithmetic and break-even.
Outcome cost_arithmetic() {
    bool ok = true;
    std::vector<std::string> notes;
    const double bid = 999.0, ask = 1001.0;
    const double hs = spread_cost(bid, ask);
    ok &= hs == (ask - bid) / (2.0 * ((ask + bid) / 2.0)) && hs == 0.001;
    const auto k3 = CostParams::impact_k_03();
    const double sigma = 0.02, q = 1e5, adv = 1e7;
    const double impact = impact_cost(k3, sigma, q, adv);
    ok &= impact == 0.3 * sigma * std::sqrt(q / adv) && std::abs(impact * 1e4 - 6.0) < 1e-12;
    notes.push_back(fmt::format("half spread {} bps, impact {} bps", hs * 1e4, impact * 1e4));

    // Total on one name: AUM 1e6, trade 0.1 of the book.
    {
        CostParams p;
        p.aum = 1e6;
        WeightBook book;
        book.universe = std::make_shared<std::vector<std::string>>(std::vector<std::string>{oracle::sec_id(0)});
        const auto cal = oracle::days(2);
        book.days.push_back({cal[0], {}, {}, false, true});
        book.days.push_back({cal[1], {0}, {0.1}, false, true});
        const auto inputs = oracle::dense_panel(1, 2, {"half_spread", "sigma", "adv"},
                                                [&](std::size_t c, std::size_t, std::size_t) { return c == 0 ? hs : c == 1 ? sigma : adv; });
        ReturnSeries gross{{cal[0], cal[1]}, {0.0, 0.0}, 0};
        const auto net = net_returns(gross, book, inputs, p);
        const double hand = -(0.1 * (hs + 0.3 * sigma * std::sqrt(0.1 * 1e6 / adv)));
        ok &= net.net.values[1] == hand && std::abs(net.average_cost_bps - 16.0) < 1e-9;
    }

    std::mt19937_64 rng(606);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t n = 10, T = 250;
        WeightBook book;
        auto ids = std::make_shared<std::vector<std::string>>();
        for (std::size_t i = 0; i < n; ++i) ids->push_back(oracle::sec_id(i));
        book.universe = ids;
        const auto cal = oracle::days(T);
        ReturnSeries gross;
        for (std::size_t t = 0; t < T; ++t) {
            Vec a(n);
            for (auto& v : a) v = g(rng);
            a[0] = std::abs(a[0]);
            a[1] = -std::abs(a[1]);
            WeightBook::Day d;
            d.date = cal[t];
            const auto w = *long_short_weights(a);
            for (std::size_t i = 0; i < n; ++i) {
                d.securities.push_back(static_cast<std::uint32_t>(i));
                d.weights.push_back(w[i]);
            }
            book.days.push_back(std::move(d));
            gross.dates.push_back(cal[t]);
            gross.values.push_back(0.001 * (1.0 + rep % 5) + 0.005 * g(rng));
        }
        const double closed = break_even_cost_bps(gross, turnover(book));
        auto mean_net = [&](double bps) {
            CostParams p;
            p.mode = CostMode::static_bps;
            p.static_cost_bps = bps;
            return oracle::mean(net_returns(gross, book, Panel{}, p).net.values);
        };
        double lo = 0.0, hi = 1e4;
        for (int it = 0; it < 200 && hi - lo > 1e-9; ++it) {
            const double mid = 0.5 * (lo + hi);
            (mean_net(mid) > 0.0 ? lo : hi) = mid;
        }
        worst = std::max(worst, std::abs(0.5 * (lo + hi) - closed));
    }
    ok &= worst <= 0.01;
    notes.push_back(fmt::format("break-even max diff {:.2e} bps", worst));
    return {ok, notes[0] + "; " + notes[1]};
}

// Planted-signal panel with forward returns for horizon 0.
Panel planted(std::size_t n, std::size_t T, double beta, double phi, std::uint64_t seed) {
    SyntheticSpec s;
    s.n_securities = n;
    s.n_days = T;
    s.signals = {{"sig1", beta, phi}};
    s.seed = seed;
    return forward_return(generate_synthetic(s).panel, 0);
}

// 7. Smoothing sweep direction.
Outcome smoothing_direction() {
    const auto panel = planted(100, 2000, 0.001, 0.9, 707);
    const auto raw = ScorePanel::from_column(panel, "sig1");
    const std::string fwd = forward_return_column(0);
    Vec turn, sr;
    for (int w : {1, 5, 10, 21}) {
        PortfolioOptions o;
        o.smoothing_window = w;
        const auto book = build_weight_book(raw, o);
        auto gross = portfolio_returns(book, panel, fwd);
        gross.values.pop_back(); // last date has no forward return
        turn.push_back(oracle::mean(turnover(book).values));
        sr.push_back(sharpe(gross.values));
    }
    bool ok = true;
    for (std::size_t k = 1; k < turn.size(); ++k) ok &= turn[k] < turn[k - 1] && sr[k] <= sr[k - 1];
    return {ok, fmt::format("turnover {:.3f} {:.3f} {:.3f} {:.3f}; gross SR {:.2f} {:.2f} {:.2f} {:.2f}", turn[0],
                            turn[1], turn[2], turn[3], sr[0], sr[1], sr[2], sr[3])};
}

// 8. Alpha decay: look-ahead signal and a persistent planted signal.
Outcome decay_direction() {
    const std::vector<int> lags{0, 1, 2, 3, 5, 10};
    bool ok = true;
    std::string detail;
    {
        const std::size_t n = 40, T = 40000;
        std::mt19937_64 rng(808);
        std::normal_distribution<double> g;
        std::vector<Vec> r(n, Vec(T));
        for (auto& s : r)
            for (auto& v : s) v = 0.02 * g(rng);
        const auto panel = oracle::dense_panel(n, T, {"ret"}, [&](std::size_t, std::size_t i, std::size_t t) { return r[i][t]; });
        Vec score(n * T);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t t = 0; t < T; ++t) score[i * T + t] = t + 1 < T ? r[i][t + 1] : oracle::nan();
        const auto rows = alpha_decay(ScorePanel(panel, score), panel, lags);
        double worst = 0.0;
        for (const auto& row : rows)
            if (row.lag >= 1) worst = std::max(worst, std::abs(row.sharpe));
        ok &= worst < 0.3 && rows[0].sharpe > 10.0;
        detail += fmt::format("look-ahead SR lag0 {:.1f}, max |SR| at lag>=1 {:.3f}", rows[0].sharpe, worst);
    }
    {
        Vec mean(lags.size(), 0.0);
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            SyntheticSpec s;
            s.n_securities = 50;
            s.n_days = 1000;
            s.signals = {{"sig1", 0.002, 0.9}};
            s.seed = 8000 + seed;
            const auto panel = generate_synthetic(s).panel;
            const auto rows = alpha_decay(ScorePanel::from_column(panel, "sig1"), panel, lags);
            for (std::size_t k = 0; k < lags.size(); ++k) mean[k] += rows[k].sharpe / 20.0;
        }
        for (std::size_t k = 1; k < mean.size(); ++k) ok &= mean[k] <= mean[k - 1];
        detail += "; planted mean SR";
        for (double m : mean) detail += fmt::format(" {:.2f}", m);
    }
    return {ok, detail};
}

// 9. Inference calibration.
Outcome inference_calibration() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(909);
    std::normal_distribution<double> g;
    bool exact = true;
    for (int rep = 0; rep < 20; ++rep) {
        Vec x(50 + 37 * rep);
        for (auto& v : x) v = g(rng);
        double m = 0.0;
        for (double v : x) m += v;
        m /= static_cast<double>(x.size());
        double ss = 0.0;
        for (double v : x) ss += (v - m) * (v - m);
        exact &= newey_west_long_run_variance(x, 0) == ss / static_cast<double>(x.size());
    }
    const double mu = 0.0005, sd = 0.01;
    const double truth = std::sqrt(kTradingDays) * mu / sd;
    int covered = 0;
    const int sims = 200;
    for (int s = 0; s < sims; ++s) {
        Vec x(1500);
        for (auto& v : x) v = mu + sd * g(rng);
        BootstrapOptions o;
        o.seed = derive_seed(909, "coverage/" + std::to_string(s));
        const auto ci = stationary_bootstrap_ci(x, [](std::span<const double> y) { return sharpe_or_missing(y); }, o);
        if (ci.lower <= truth && truth <= ci.upper) ++covered;
    }
    const double pct = 100.0 * covered / sims;
    const double secs = seconds_since(t0);
    return {exact && std::abs(pct - 95.0) <= 3.0 && secs < 600.0,
            fmt::format("NW lag-0 exact: {}; coverage {:.1f}% over {} sims, {:.1f}s", exact ? "yes" : "no", pct, sims,
                        secs)};
}

// 10. Factor attribution recovery.
Outcome attribution_recovery() {
    SyntheticSpec s;
    s.n_securities = 30;
    s.n_days = 2000;
    s.seed = 1010;
    const auto factors = generate_synthetic(s).factors;
    std::mt19937_64 rng(1011);
    std::normal_distribution<double> g;
    ReturnSeries strat;
    strat.dates = factors.dates;
    for (std::size_t t = 0; t < factors.dates.size(); ++t) strat.values.push_back(0.5 * factors.columns[0][t] + 0.002 * g(rng));
    AttributionOptions o;
    o.lags = 5;
    const auto fit = factor_attribution(strat, factors, o);
    const double beta = fit.betas[0];
    return {factors.names[0] == "Mkt" && std::abs(beta - 0.5) <= 0.02 && std::abs(fit.alpha_t) < 2.0,
            fmt::format("n {}, beta_Mkt {:.4f}, alpha t {:.2f}", fit.n, beta, fit.alpha_t)};
}

// 11. Optimizer vs exhaustive grid over every long/short split at 1e-3.
struct GridProblem {
    OptProblem p;
    RiskModel risk;
    std::array<std::array<double, 4>, 4> cov{};
};

double grid_objective(const GridProblem& g, const std::array<double, 4>& w) {
    double v = 0.0;
    for (int i = 0; i < 4; ++i) {
        v += g.p.alpha[i] * w[i] - g.p.lambda_tc * g.p.cost[i] * std::abs(w[i] - g.p.prev[i]);
        double sw = 0.0;
        for (int j = 0; j < 4; ++j) sw += g.cov[i][j] * w[j];
        v -= g.p.lambda_risk * w[i] * sw;
    }
    return v;
}

// All integer vectors over `names` with entries in [0, cap] summing to 1000.
void compositions(const std::vector<int>& names, int cap, std::vector<std::array<int, 4>>& out) {
    std::array<int, 4> cur{};
    std::function<void(std::size_t, int)> rec = [&](std::size_t k, int left) {
        if (k + 1 == names.size()) {
            if (left <= cap) {
                cur[names[k]] = left;
                out.push_back(cur);
                cur[names[k]] = 0;
            }
            return;
        }
        for (int v = 0; v <= std::min(cap, left); ++v) {
            cur[names[k]] = v;
            rec(k + 1, left - v);
        }
        cur[names[k]] = 0;
    };
    rec(0, 1000);
}

double grid_best(const GridProblem& g) {
    const int cap = static_cast<int>(std::lround(g.p.w_max * 1000.0));
    double best = -std::numeric_limits<double>::infinity();
    for (int mask = 1; mask < 15; ++mask) {
        std::vector<int> L, S;
        for (int i = 0; i < 4; ++i) (mask >> i & 1 ? L : S).push_back(i);
        std::vector<std::array<int, 4>> lw, sw;
        compositions(L, cap, lw);
        compositions(S, cap, sw);
        for (const auto& a : lw)
            for (const auto& b : sw) {
                std::array<double, 4> w{};
                if (g.p.sector_neutral && (a[0] + a[1] != b[0] + b[1] || a[2] + a[3] != b[2] + b[3])) continue;
                for (int i = 0; i < 4; ++i) w[i] = (a[i] - b[i]) / 1000.0;
                best = std::max(best, grid_objective(g, w));
            }
    }
    return best;
}

Outcome optimizer_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1111);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<std::string> sectors{"A", "A", "B", "B"};
    double worst_gap = 0.0, worst_feas = 0.0, worst_tilt = 0.0;
    int failures = 0;
    for (int rep = 0; rep < 100; ++rep) {
        GridProblem g;
        const bool neutral = rep % 2 == 1;
        const bool full_cap = !neutral && rep % 4 == 0;
        g.p.w_max = full_cap ? 1.0 : 0.5 + 0.1 * std::floor(u(rng) * 5.0);
        // Capped books need two names per side; sector-neutral books need
        // one of each sign per sector.
        g.p.alpha.resize(4);
        for (auto& a : g.p.alpha) a = gauss(rng);
        if (!full_cap) {
            g.p.alpha[0] = std::abs(g.p.alpha[0]);
            g.p.alpha[1] = -std::abs(g.p.alpha[1]);
            g.p.alpha[2] = std::abs(g.p.alpha[2]);
            g.p.alpha[3] = -std::abs(g.p.alpha[3]);
        } else if (std::all_of(g.p.alpha.begin(), g.p.alpha.end(), [](double a) { return a > 0; }) ||
                   std::all_of(g.p.alpha.begin(), g.p.alpha.end(), [](double a) { return a < 0; })) {
            g.p.alpha[0] = -g.p.alpha[0];
        }
        g.p.cost.resize(4);
        for (auto& c : g.p.cost) c = 0.5 * u(rng);
        g.p.prev = {0.0, 0.0, 0.0, 0.0};
        if (rep % 3 != 0) {
            const int x = 1 + static_cast<int>(u(rng) * 999.0), y = 1 + static_cast<int>(u(rng) * 999.0);
            g.p.prev = {x / 1000.0, -y / 1000.0, (1000 - x) / 1000.0, -(1000 - y) / 1000.0};
        }
        g.p.lambda_tc = 2.0 * u(rng);
        g.p.lambda_risk = std::pow(10.0, 4.0 * u(rng) - 1.0);
        g.p.sector_neutral = neutral;
        g.p.sectors = sectors;
        Vec vol(4);
        for (auto& v : vol) v = 0.01 + 0.03 * u(rng);
        g.risk = build_risk_model(vol, sectors, rep % 5 == 0 ? RiskKind::diagonal : RiskKind::sector_factor);
        for (int j = 0; j < 4; ++j) {
            Vec e(4, 0.0), col(4);
            e[j] = 1.0;
            g.risk.multiply(e, col);
            for (int i = 0; i < 4; ++i) g.cov[i][j] = col[i];
        }

        const auto res = solve_portfolio(g.p, g.risk);
        if (!res.ok()) {
            ++failures;
            continue;
        }
        const auto& w = res.weights;
        double pos = 0.0, neg = 0.0, cap = 0.0;
        for (double x : w) {
            (x > 0 ? pos : neg) += x;
            cap = std::max(cap, std::abs(x) - g.p.w_max);
        }
        double feas = std::max({std::abs(pos - 1.0), std::abs(neg + 1.0), cap, 0.0});
        if (neutral) {
            feas = std::max({feas, std::abs(w[0] + w[1]), std::abs(w[2] + w[3])});
            worst_tilt = std::max(worst_tilt, concentration_metrics(w, sectors).sector_tilts);
        }
        worst_feas = std::max(worst_feas, feas);
        const std::array<double, 4> wa{w[0], w[1], w[2], w[3]};
        const double best = grid_best(g);
        worst_gap = std::max(worst_gap, std::abs(grid_objective(g, wa) - best));
    }

    // The comparison table's tilt column for a sector-neutral construction.
    SyntheticSpec spec;
    spec.n_securities = 30;
    spec.n_days = 120;
    spec.seed = 1112;
    ConstructionOptions copt;
    copt.costs.aum = 1e6;
    copt.return_column = forward_return_column(0);
    const auto panel = forward_return(compute_cost_inputs(generate_synthetic(spec).panel, copt.costs), 0);
    const std::vector<ConstructionVariant> variants{{ConstructionKind::sector_neutral, 0.25, "neutral"}};
    const auto rows = compare_constructions(ScorePanel::from_column(panel, "sig1"), panel, variants, copt);
    const auto table = to_markdown(optimizer_table(rows));
    const bool table_zero = rows.size() == 1 && rows[0].sector_tilts <= 1e-8 &&
                            table.find("| neutral |") != std::string::npos &&
                            table.find("| 0.0% |") != std::string::npos;

    const double secs = seconds_since(t0);
    return {failures == 0 && worst_gap <= 1e-3 && worst_feas <= 1e-8 && worst_tilt <= 1e-8 && table_zero,
            fmt::format("{} solver failures, max |obj - grid| {:.2e}, max infeasibility {:.1e}, max sector-neutral "
                        "tilt {:.1e}, table tilt {:.1e}, {:.1f}s",
                        failures, worst_gap, worst_feas, worst_tilt, rows.empty() ? -1.0 : rows[0].sector_tilts,
                        secs)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 12. Two demo runs produce identical bytes.
Outcome demo_determinism() {
    const fs::path tmp = fs::temp_directory_path() / fmt::format("xsalpha_accept_{}", ::getpid());
    fs::remove_all(tmp);
    auto c = load_config(fs::path(XSALPHA_SOURCE_DIR) / "configs/demo.yaml");
    const unsigned before = max_jobs();
    c.output.dir = tmp / "a";
    set_max_jobs(1);
    run_experiment(c);
    c.output.dir = tmp / "b";
    set_max_jobs(std::max(2u, before));
    run_experiment(c);
    set_max_jobs(before);
    std::size_t files = 0, differ = 0;
    for (const auto& e : fs::directory_iterator(tmp / "a")) {
        ++files;
        if (slurp(e.path()) != slurp(tmp / "b" / e.path().filename())) ++differ;
    }
    std::size_t files_b = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp / "b")) ++files_b;
    fs::remove_all(tmp);
    return {files > 0 && files == files_b && differ == 0,
            fmt::format("{} files compared, {} differ", files, differ)};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"weight map neutrality and leverage", weight_map},
        {"spearman IC oracle equivalence", ic_oracle},
        {"leakage suite", leakage},
        {"showcase feature corpus", feature_corpus},
        {"pattern analyzer ranking prevalence", pattern_ranking},
        {"cost arithmetic and break-even", cost_arithmetic},
        {"smoothing direction", smoothing_direction},
        {"alpha decay direction", decay_direction},
        {"inference calibration", inference_calibration},
        {"factor attribution recovery", attribution_recovery},
        {"optimizer grid oracle", optimizer_oracle},
        {"end-to-end determinism", demo_determinism},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        if (!o.pass) ++failed;
        fmt::print("{} criterion {:>2} {}: {}\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail);
        std::fflush(stdout);
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
