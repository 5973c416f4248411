#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "random_expr.hpp"
#include "xsalpha/errors.hpp"
#include "xsalpha/feature_dsl.hpp"

using namespace xsa;
using namespace xsa::fx;

namespace {

bool same(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0 || (std::isnan(a) && std::isnan(b)); }

Panel one_date(const std::vector<double>& x) {
    return oracle::dense_panel(x.size(), 1, {"x"}, [&](std::size_t, std::size_t i, std::size_t) { return x[i]; });
}

bool has_message(const ValidationReport& r, const std::string& text) {
    for (const auto& v : r.violations)
        if (v.message.find(text) != std::string::npos) return true;
    return false;
}

} // namespace

TEST(Parse, RankOfProduct) {
    const auto e = parse_feature("cs_rank(col(x) * col(y))");
    const auto* r = std::get_if<CsRank>(&e->node);
    ASSERT_NE(r, nullptr);
    const auto* b = std::get_if<Binary>(&r->arg->node);
    ASSERT_NE(b, nullptr);
    EXPECT_EQ(b->op, BinaryOp::mul);
}

TEST(Parse, RatioOfRollingWindows) {
    const auto e = parse_feature("rolling_mean(col(x), 5) / rolling_std(col(x), 20)");
    const auto* b = std::get_if<Binary>(&e->node);
    ASSERT_NE(b, nullptr);
    EXPECT_EQ(b->op, BinaryOp::div);
    const auto* m = std::get_if<Rolling>(&b->lhs->node);
    const auto* s = std::get_if<Rolling>(&b->rhs->node);
    ASSERT_TRUE(m && s);
    EXPECT_EQ(m->kind, RollingKind::mean);
    EXPECT_EQ(m->window, 5);
    EXPECT_EQ(s->kind, RollingKind::std);
    EXPECT_EQ(s->window, 20);
    EXPECT_EQ(s->ddof, 0);
}

TEST(Parse, ErrorsCarryPosition) {
    try {
        parse_feature("cs_rank(");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 1u);
        EXPECT_EQ(e.column(), 9u);
    }
    EXPECT_THROW(parse_feature("bogus(col(x))"), ParseError);
    EXPECT_THROW(parse_feature("lag(col(x))"), ParseError);
    EXPECT_THROW(parse_feature("add(col(x), col(y), col(z))"), ParseError);
    try {
        parse_feature("cs_rank(col(x))\n  + $");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Parse, PrettyPrintRoundTrip) {
    oracle::ExprGen gen(42, {"a", "b", "c"});
    for (int i = 0; i < 300; ++i) {
        const auto e = gen(5);
        const auto text = to_string(*e);
        const auto back = parse_feature(text);
        EXPECT_TRUE(*back == *e) << text;
    }
}

TEST(Check, LagRules) {
    EXPECT_TRUE(check_point_in_time(*parse_feature("lag(col(x), 3)")).passed());
    const auto neg = check_point_in_time(*parse_feature("lag(col(x), -1)"));
    EXPECT_FALSE(neg.passed());
    EXPECT_TRUE(has_message(neg, "negative lag"));
    EXPECT_EQ(neg.violations.front().path, "$");
}

TEST(Check, WindowRules) {
    const auto r = check_point_in_time(*parse_feature("rolling_mean(col(x), 5, min_periods=9)"));
    EXPECT_TRUE(has_message(r, "min_periods exceeds window"));
    const auto many = check_point_in_time(*parse_feature("lag(col(x), -2) + rolling_max(col(y), 0, min_periods=1)"));
    EXPECT_EQ(many.violations.size(), 2u); // negative lag, window < 1
    const std::vector<std::string> declared{"x"};
    EXPECT_TRUE(check_point_in_time(*parse_feature("col(x)"), declared).passed());
    EXPECT_TRUE(has_message(check_point_in_time(*parse_feature("col(x) + col(z)"), declared), "undeclared column 'z'"));
}

TEST(Evaluate, RejectsFailingExpression) {
    const auto p = one_date({1, 2});
    EXPECT_THROW(evaluate(*parse_feature("lag(col(x), -1)"), p), std::invalid_argument);
    EXPECT_THROW(evaluate(*parse_feature("col(nope)"), p), DataError);
}

TEST(Evaluate, CsRank) {
    const auto v = evaluate(*parse_feature("cs_rank(col(x))"), one_date({3, 1, 2}));
    EXPECT_DOUBLE_EQ(v[0], 1.0);
    EXPECT_DOUBLE_EQ(v[1], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(v[2], 2.0 / 3.0);
    const auto t = evaluate(*parse_feature("cs_rank(col(x))"), one_date({1, 1}));
    EXPECT_DOUBLE_EQ(t[0], 0.75);
    EXPECT_DOUBLE_EQ(t[1], 0.75);
}

TEST(Evaluate, CsRankMatchesBruteForceWithTies) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> d(0, 6);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(25);
        for (auto& v : x) v = d(rng) == 0 ? oracle::nan() : static_cast<double>(d(rng));
        const auto got = evaluate(*parse_feature("cs_rank(col(x))"), one_date(x));
        const auto want = oracle::pct_rank(x);
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_TRUE(same(got[i], want[i]) || std::abs(got[i] - want[i]) < 1e-15);
    }
}

TEST(Evaluate, CsRankInvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    std::vector<double> x(40);
    for (auto& v : x) v = g(rng);
    const auto p = one_date(x);
    const auto a = evaluate(*parse_feature("cs_rank(col(x))"), p);
    const auto b = evaluate(*parse_feature("cs_rank(col(x) * 3 + 7)"), p);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Evaluate, CsZScorePopulation) {
    const auto v = evaluate(*parse_feature("cs_zscore(col(x))"), one_date({1, 2, 3}));
    EXPECT_NEAR(v[0], -1.224744871391589, 1e-12);
    EXPECT_NEAR(v[1], 0.0, 1e-15);
    EXPECT_NEAR(v[2], 1.224744871391589, 1e-12);
}

TEST(Evaluate, RollingStdBoundedWindow) {
    const std::vector<double> xs{1, 4, 2, 8, 5, 7, 3};
    const auto p = oracle::dense_panel(1, xs.size(), {"x"}, [&](std::size_t, std::size_t, std::size_t t) { return xs[t]; });
    const auto pop = evaluate(*parse_feature("rolling_std(col(x), 20, min_periods=1)"), p);
    const auto smp = evaluate(*parse_feature("rolling_std(col(x), 20, min_periods=1, ddof=1)"), p);
    const std::vector<double> first5(xs.begin(), xs.begin() + 5);
    EXPECT_NEAR(pop[4], oracle::pop_std(first5), 1e-12);
    EXPECT_NEAR(smp[4], oracle::pop_std(first5) * std::sqrt(5.0 / 4.0), 1e-12);
    EXPECT_TRUE(std::isnan(smp[0]));
    EXPECT_EQ(pop[0], 0.0);
}

TEST(Evaluate, DivisionByZeroIsMissing) {
    const auto v = evaluate(*parse_feature("col(x) / (col(x) - 2)"), one_date({1, 2, 4}));
    EXPECT_EQ(v[0], -1.0);
    EXPECT_TRUE(std::isnan(v[1]));
    EXPECT_EQ(v[2], 2.0);
}

TEST(Evaluate, EwmSeededAtFirstObservation) {
    const std::vector<double> xs{oracle::nan(), 2, 4, oracle::nan(), 8};
    const auto p = oracle::dense_panel(1, xs.size(), {"x"}, [&](std::size_t, std::size_t, std::size_t t) { return xs[t]; });
    const auto v = evaluate(*parse_feature("ewm_mean(col(x), 3)"), p);
    EXPECT_TRUE(std::isnan(v[0]));
    EXPECT_EQ(v[1], 2.0);
    EXPECT_DOUBLE_EQ(v[2], 3.0);
    EXPECT_DOUBLE_EQ(v[3], 3.0);
    EXPECT_DOUBLE_EQ(v[4], 5.5);
}

// Analyst coverage x sales interaction, 30-day mean (min 10), ranked by date.
TEST(Evaluate, AnalystInteractionMatchesHandCoded) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> miss(0, 9);
    const std::size_t n = 2, T = 40;
    const auto p = oracle::dense_panel(n, T, {"analysts", "sal"}, [&](std::size_t c, std::size_t, std::size_t) {
        if (miss(rng) == 0) return oracle::nan();
        return c == 0 ? std::round(5.0 + 3.0 * g(rng)) : g(rng);
    });
    const auto got = evaluate(
        *parse_feature("cs_rank(rolling_mean(col(analysts) * col(sal), 30, min_periods=10))"), p);

    std::vector<std::vector<double>> smooth(n, std::vector<double>(T));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < T; ++t) {
            double s = 0.0;
            int cnt = 0;
            for (std::size_t k = t >= 29 ? t - 29 : 0; k <= t; ++k) {
                const double x = oracle::at(p, "analysts", i, k) * oracle::at(p, "sal", i, k);
                if (std::isnan(x)) continue;
                s += x;
                ++cnt;
            }
            smooth[i][t] = cnt >= 10 ? s / cnt : oracle::nan();
        }
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> x{smooth[0][t], smooth[1][t]};
        const auto rk = oracle::pct_rank(x);
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = *p.find_row(*p.find_security(oracle::sec_id(i)), oracle::days(T)[t]);
            EXPECT_TRUE(same(got[r], rk[i]) || std::abs(got[r] - rk[i]) < 1e-12) << i << "," << t;
        }
    }
}

TEST(Evaluate, NoLookAheadOnRandomExpressions) {
    oracle::ExprGen gen(2024, {"a", "b"});
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g;
    const std::size_t n = 6, T = 25;
    const auto base = oracle::dense_panel(n, T, {"a", "b"}, [&](std::size_t, std::size_t, std::size_t) { return g(rng); });
    for (int k = 0; k < 20; ++k) {
        const auto e = gen(4);
        const auto ref = evaluate(*e, base);
        const std::size_t cut = static_cast<std::size_t>(k) % (T - 1);
        std::vector<double> a(base.column("a").begin(), base.column("a").end());
        const auto dates = base.row_dates();
        for (std::size_t r = 0; r < a.size(); ++r)
            if (dates[r] > oracle::days(T)[cut]) a[r] = g(rng) * 100.0;
        const auto moved = evaluate(*e, base.with_column("a", a));
        for (std::size_t r = 0; r < a.size(); ++r)
            if (dates[r] <= oracle::days(T)[cut]) {
                EXPECT_TRUE(same(ref[r], moved[r])) << to_string(*e);
            }
    }
}

TEST(Manifest, ParsesContinuationsAndComments) {
    const auto defs = parse_feature_manifest("# c\nf1 = cs_rank(col(x)) # trailing\nf2 = col(x) \\\n  + col(y)\n\n");
    ASSERT_EQ(defs.size(), 2u);
    EXPECT_EQ(defs[0].name, "f1");
    EXPECT_EQ(defs[1].name, "f2");
    EXPECT_TRUE(*defs[1].expr == *parse_feature("col(x) + col(y)"));
}

TEST(Manifest, ShowcaseCorpusIsPointInTime) {
    const auto defs = load_feature_manifest(XSALPHA_SOURCE_DIR "/data/features/showcase.txt");
    ASSERT_EQ(defs.size(), 5u);
    for (const auto& d : defs) EXPECT_TRUE(check_point_in_time(*d.expr).passed()) << d.name;
}

TEST(Patterns, SingleInteraction) {
    const std::vector<ExprPtr> corpus{parse_feature("cs_rank(col(x) * col(y))")};
    const auto s = analyze_patterns(corpus);
    EXPECT_EQ(s.features, 1u);
    EXPECT_EQ(s.variable_interactions, 1.0);
    EXPECT_EQ(s.cross_sectional_ranking, 1.0);
    // cs_rank and the product; column references are not operations.
    ASSERT_EQ(s.operation_counts.size(), 1u);
    EXPECT_EQ(s.operation_counts[0], 2u);
    EXPECT_TRUE(s.window_histogram.empty());
    EXPECT_EQ(s.window_specs, 0u);
}

TEST(Patterns, HistogramOverUsedWindows) {
    const std::vector<ExprPtr> corpus{parse_feature("cs_rank(rolling_mean(col(x), 5) - rolling_mean(col(x), 60))"),
                                      parse_feature("cs_rank(ewm_mean(col(x), 21) / rolling_std(col(x), 7))")};
    const auto s = analyze_patterns(corpus);
    double total = 0.0;
    for (const auto& [k, v] : s.window_histogram) total += v;
    EXPECT_NEAR(total, 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(s.window_histogram.at("5"), 0.25);
    EXPECT_DOUBLE_EQ(s.window_histogram.at("60"), 0.25);
    EXPECT_DOUBLE_EQ(s.window_histogram.at("20-21"), 0.25);
    EXPECT_DOUBLE_EQ(s.window_histogram.at("other"), 0.25);
    EXPECT_EQ(s.multi_timeframe, 1.0);
    EXPECT_EQ(s.regime_normalization, 0.5);
}

TEST(Patterns, EmptyCorpusThrows) { EXPECT_THROW(analyze_patterns({}), std::invalid_argument); }
