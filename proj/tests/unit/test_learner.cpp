#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "xsalpha/errors.hpp"
#include "xsalpha/learner.hpp"

using namespace xsa;

namespace {

FeatureMatrix matrix(const std::vector<std::vector<double>>& rows) {
    FeatureMatrix m;
    m.rows = rows.size();
    m.cols = rows.empty() ? 0 : rows[0].size();
    for (std::size_t c = 0; c < m.cols; ++c) m.names.push_back("f" + std::to_string(c));
    for (const auto& r : rows) m.values.insert(m.values.end(), r.begin(), r.end());
    return m;
}

BoostParams exact(int trees, int depth) {
    BoostParams p;
    p.n_trees = trees;
    p.max_depth = depth;
    p.learning_rate = 1.0;
    p.min_leaf_count = 1;
    p.l2_leaf_penalty = 0.0;
    return p;
}

// y = 0.1 x + noise with x, noise ~ N(0, 1) i.i.d.
Panel planted_panel(std::size_t n, std::size_t T, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> x(n * T);
    for (auto& v : x) v = g(rng);
    return oracle::dense_panel(n, T, {"x", "z", "y"}, [&](std::size_t c, std::size_t i, std::size_t t) {
        const double xi = x[i * T + t];
        if (c == 0) return xi;
        if (c == 1) return g(rng);
        return 0.1 * xi + g(rng);
    });
}

WalkForwardSchedule schedule(std::size_t train_days, std::size_t T, int refit) {
    const auto cal = oracle::days(T);
    WalkForwardSchedule s;
    s.train_start = cal.front();
    s.train_end = cal[train_days - 1];
    s.test_start = cal[train_days];
    s.test_end = cal.back();
    s.refit_interval = refit;
    return s;
}

} // namespace

TEST(Standardize, ThreePoints) {
    const auto p = oracle::dense_panel(3, 1, {"a", "b"}, [](std::size_t c, std::size_t i, std::size_t) {
        return c == 0 ? static_cast<double>(i + 1) : 5.0;
    });
    const auto s = standardize_features(p, {"a", "b"});
    EXPECT_NEAR(s.column("a")[0], -1.224744871391589, 1e-12);
    EXPECT_NEAR(s.column("a")[1], 0.0, 1e-15);
    EXPECT_NEAR(s.column("a")[2], 1.224744871391589, 1e-12);
    for (double v : s.column("b")) EXPECT_EQ(v, 0.0);
}

TEST(Standardize, MissingExcluded) {
    const std::vector<double> a{1.0, oracle::nan(), 3.0};
    const auto p = oracle::dense_panel(3, 1, {"a"}, [&](std::size_t, std::size_t i, std::size_t) { return a[i]; });
    const auto s = standardize_features(p, {"a"});
    EXPECT_DOUBLE_EQ(s.column("a")[0], -1.0);
    EXPECT_TRUE(std::isnan(s.column("a")[1]));
    EXPECT_DOUBLE_EQ(s.column("a")[2], 1.0);
}

TEST(Params, Validation) {
    BoostParams p;
    p.n_trees = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.learning_rate = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.max_depth = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.l2_leaf_penalty = -1.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Boosting, SingleStump) {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = -5; i <= 5; ++i) {
        if (i == 0) continue;
        rows.push_back({static_cast<double>(i)});
        y.push_back(i > 0 ? 1.0 : -1.0);
    }
    const auto x = matrix(rows);
    auto p = exact(1, 1);
    const auto m = BoostedTrees::fit(x, y, p);
    for (std::size_t r = 0; r < y.size(); ++r) EXPECT_DOUBLE_EQ(m.predict_row(x.row(r)), y[r]);

    // Closed form with shrinkage: lr * sum / (n + l2) on each side of five rows.
    p.learning_rate = 0.3;
    p.l2_leaf_penalty = 1.0;
    const auto shrunk = BoostedTrees::fit(x, y, p);
    for (std::size_t r = 0; r < y.size(); ++r) {
        const double v = shrunk.predict_row(x.row(r));
        EXPECT_NEAR(v, y[r] * 0.3 * 5.0 / 6.0, 1e-15);
        EXPECT_LE(std::abs(v - y[r]), 1.0);
        EXPECT_GT(v * y[r], 0.0);
    }
}

TEST(Boosting, ConstantTargetExactAfterOneTree) {
    const auto x = matrix({{1.0}, {2.0}, {3.0}, {4.0}});
    const std::vector<double> y(4, 2.5);
    const auto m = BoostedTrees::fit(x, y, exact(1, 3));
    for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(m.predict_row(x.row(r)), 2.5);
}

TEST(Boosting, TrainingLossNonIncreasing) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        std::uniform_int_distribution<int> miss(0, 7);
        std::vector<std::vector<double>> rows(300, std::vector<double>(4));
        std::vector<double> y(300);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (auto& v : rows[r]) v = miss(rng) == 0 ? oracle::nan() : g(rng);
            y[r] = (std::isnan(rows[r][0]) ? 0.0 : std::sin(3.0 * rows[r][0])) + 0.5 * g(rng);
        }
        BoostParams p;
        p.n_trees = 40;
        p.max_depth = 3;
        p.min_leaf_count = 5;
        p.seed = seed;
        const auto m = BoostedTrees::fit(matrix(rows), y, p);
        const auto& mse = m.training_mse();
        ASSERT_EQ(mse.size(), 40u);
        for (std::size_t k = 1; k < mse.size(); ++k) EXPECT_LE(mse[k], mse[k - 1]) << "seed " << seed << " tree " << k;
    }
}

TEST(Boosting, MissingRowTakesDefaultBranches) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::vector<std::vector<double>> rows(200, std::vector<double>(2));
    std::vector<double> y(200);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        rows[r] = {g(rng), r % 9 == 0 ? oracle::nan() : g(rng)};
        y[r] = rows[r][0] + g(rng);
    }
    BoostParams p;
    p.n_trees = 10;
    p.min_leaf_count = 5;
    const auto m = BoostedTrees::fit(matrix(rows), y, p);
    double expect = 0.0;
    for (const auto& tree : m.trees()) {
        int k = 0;
        while (!tree[static_cast<std::size_t>(k)].is_leaf()) {
            const auto& node = tree[static_cast<std::size_t>(k)];
            k = node.default_left ? node.left : node.right;
        }
        expect += tree[static_cast<std::size_t>(k)].value;
    }
    const std::vector<double> blank{oracle::nan(), oracle::nan()};
    EXPECT_DOUBLE_EQ(m.predict_row(blank), expect);
}

TEST(Boosting, AllMissingFeatureIgnored) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    std::vector<std::vector<double>> rows(100);
    std::vector<double> y(100);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        rows[r] = {oracle::nan(), g(rng)};
        y[r] = rows[r][1] > 0 ? 1.0 : 0.0;
    }
    const auto m = BoostedTrees::fit(matrix(rows), y, exact(3, 2));
    for (const auto& tree : m.trees())
        for (const auto& node : tree) EXPECT_NE(node.feature, 0);
}

TEST(Boosting, TextRoundTripIsExact) {
    const auto p = planted_panel(20, 40, 3);
    BoostParams bp;
    bp.n_trees = 15;
    bp.min_leaf_count = 10;
    bp.subsample_fraction = 0.7;
    bp.seed = 77;
    const auto m = fit_boosted_trees(p, {"x", "z"}, "y", bp);
    std::stringstream buf;
    m.write_text(buf);
    const auto back = BoostedTrees::read_text(buf);
    const auto x = feature_matrix(p, {"x", "z"});
    const auto a = m.predict(x);
    const auto b = back.predict(x);
    for (std::size_t r = 0; r < a.size(); ++r) EXPECT_EQ(a[r], b[r]);
    EXPECT_EQ(back.feature_names(), m.feature_names());
}

TEST(Boosting, SeedDeterminism) {
    const auto p = planted_panel(20, 40, 5);
    BoostParams bp;
    bp.n_trees = 10;
    bp.min_leaf_count = 10;
    bp.subsample_fraction = 0.5;
    bp.seed = 1;
    const auto a = predict(fit_boosted_trees(p, {"x", "z"}, "y", bp), p);
    const auto b = predict(fit_boosted_trees(p, {"x", "z"}, "y", bp), p);
    for (std::size_t r = 0; r < a.rows(); ++r) EXPECT_EQ(a.values()[r], b.values()[r]);
}

TEST(Fit, TooFewRowsThrows) {
    const auto p = planted_panel(2, 3, 1);
    BoostParams bp;
    bp.min_leaf_count = 20;
    EXPECT_THROW(fit_boosted_trees(p, {"x"}, "y", bp), DataError);
}

TEST(Predict, EmptyPanel) {
    const auto p = planted_panel(10, 10, 1);
    BoostParams bp;
    bp.n_trees = 2;
    bp.min_leaf_count = 5;
    const auto m = fit_boosted_trees(p, {"x"}, "y", bp);
    const auto empty = p.select_rows({});
    EXPECT_TRUE(predict(m, empty).empty());
}

TEST(Schedule, Rejections) {
    auto s = schedule(10, 20, 5);
    s.train_end = s.test_start;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = schedule(10, 20, 0);
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(WalkForward, SingleBlockMatchesManualFit) {
    const std::size_t n = 15, T = 60, train = 30;
    const auto p = planted_panel(n, T, 21);
    BoostParams bp;
    bp.n_trees = 8;
    bp.min_leaf_count = 10;
    const auto s = schedule(train, T, static_cast<int>(T - train));
    const auto wf = run_walk_forward(p, {"x", "z"}, "y", s, bp);
    ASSERT_EQ(wf.blocks.size(), 1u);
    // Lag-0 targets of the last training day are realized on test_start.
    EXPECT_EQ(wf.blocks[0].dropped_for_leakage, n);

    const auto cal = oracle::days(T);
    std::vector<std::size_t> train_rows, test_rows;
    const auto dates = p.row_dates();
    for (std::size_t r = 0; r < p.rows(); ++r) {
        if (dates[r] < cal[train - 1]) train_rows.push_back(r);
        if (dates[r] >= cal[train]) test_rows.push_back(r);
    }
    const auto model = fit_boosted_trees(p.select_rows(train_rows), {"x", "z"}, "y", bp);
    const auto manual = predict(model, p.select_rows(test_rows));
    ASSERT_EQ(wf.scores.rows(), manual.rows());
    for (std::size_t r = 0; r < manual.rows(); ++r) EXPECT_EQ(wf.scores.values()[r], manual.values()[r]);
}

TEST(WalkForward, ShufflingFutureTargetsChangesNothing) {
    const std::size_t n = 12, T = 80, train = 30;
    const auto p = planted_panel(n, T, 33);
    BoostParams bp;
    bp.n_trees = 6;
    bp.min_leaf_count = 10;
    bp.subsample_fraction = 0.8;
    bp.seed = 3;
    auto s = schedule(train, T, 10);
    s.target_lag = 2;
    const auto ref = run_walk_forward(p, {"x", "z"}, "y", s, bp);
    const auto dates = p.row_dates();
    const auto y = p.column("y");
    std::mt19937_64 rng(1);
    for (const auto& block : ref.blocks) {
        std::vector<double> shuffled(y.begin(), y.end());
        std::vector<std::size_t> future;
        for (std::size_t r = 0; r < p.rows(); ++r)
            if (dates[r] >= block.test_start) future.push_back(r);
        std::vector<double> vals;
        for (auto r : future) vals.push_back(shuffled[r] + 10.0);
        std::shuffle(vals.begin(), vals.end(), rng);
        for (std::size_t k = 0; k < future.size(); ++k) shuffled[future[k]] = vals[k];
        const auto moved = run_walk_forward(p.with_column("y", shuffled), {"x", "z"}, "y", s, bp);
        ASSERT_EQ(moved.scores.rows(), ref.scores.rows());
        const auto sd = ref.scores.keys().row_dates();
        for (std::size_t r = 0; r < ref.scores.rows(); ++r)
            if (sd[r] <= block.test_end) {
                EXPECT_EQ(moved.scores.values()[r], ref.scores.values()[r]);
            }
    }
}

TEST(WalkForward, EmptyTrainingBlockSkipped) {
    const auto p = planted_panel(5, 30, 2);
    BoostParams bp;
    bp.n_trees = 2;
    bp.min_leaf_count = 1000;
    const auto wf = run_walk_forward(p, {"x"}, "y", schedule(10, 30, 10), bp);
    EXPECT_EQ(wf.skipped_blocks(), 2u);
    EXPECT_EQ(wf.warnings.size(), 2u);
    EXPECT_TRUE(wf.scores.empty());
}

TEST(WalkForward, RecoversPlantedSignal) {
    const std::size_t n = 50, T = 750, train = 250;
    const auto p = planted_panel(n, T, 2718);
    BoostParams bp;
    bp.n_trees = 30;
    bp.max_depth = 2;
    bp.min_leaf_count = 100;
    bp.subsample_fraction = 0.8;
    bp.seed = 11;
    const auto wf = run_walk_forward(p, {"x", "z"}, "y", schedule(train, T, 63), bp);
    const auto& keys = wf.scores.keys();
    const auto sd = keys.row_dates();
    double ic = 0.0;
    std::size_t dates = 0;
    for (std::size_t d = 0; d < keys.num_dates(); ++d) {
        std::vector<double> s, y;
        for (auto r : keys.rows_on(d)) {
            s.push_back(wf.scores.values()[r]);
            const auto sec = p.find_security(keys.security_id(keys.row_security()[r]));
            y.push_back(p.column("y")[*p.find_row(*sec, sd[r])]);
        }
        ic += oracle::spearman(s, y);
        ++dates;
    }
    EXPECT_EQ(dates, T - train);
    EXPECT_GT(ic / static_cast<double>(dates), 0.05);
}
