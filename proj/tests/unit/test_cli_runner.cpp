#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <unistd.h>

#include "xsalpha/config.hpp"
#include "xsalpha/errors.hpp"
#include "xsalpha/experiment.hpp"
#include "xsalpha/parallel.hpp"
#include "xsalpha/report.hpp"
#include "xsalpha/synthetic.hpp"

namespace fs = std::filesystem;
using namespace xsa;

namespace {

const fs::path kGolden = fs::path(XSALPHA_FIXTURE_DIR) / "golden";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class TempDir {
  public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("xsalpha_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

  private:
    static inline int counter_ = 0;
    fs::path path_;
};

const char* kMinimal = R"(
seed: 1
synthetic: {n_securities: 12, n_days: 120, start: 2020-01-01}
features: {manifest: feats.txt}
schedule: {train_start: 2020-01-01, train_end: 2020-03-31, test_start: 2020-04-01, test_end: 2020-06-30}
)";

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

} // namespace

TEST(Config, ParsesDefaultsAndSections) {
    const auto c = parse_config(kMinimal, "/base");
    EXPECT_EQ(c.seed, 1u);
    ASSERT_TRUE(c.synthetic);
    EXPECT_EQ(c.synthetic->n_securities, 12u);
    EXPECT_EQ(c.feature_manifest, fs::path("/base/feats.txt"));
    ASSERT_EQ(c.strategies.size(), 1u);
    EXPECT_EQ(c.horizon_lag, 1);
    EXPECT_EQ(c.costs.impact_k, 0.3);
    EXPECT_EQ(c.smoothing_sweep, (std::vector<int>{1, 5, 10, 21}));
    EXPECT_FALSE(c.optimizer_enabled);
}

TEST(Config, Errors) {
    EXPECT_THROW(parse_config(std::string(kMinimal) + "colour: red\n"), ConfigError);
    EXPECT_THROW(parse_config(std::string(kMinimal) + "horizon_lag: soon\n"), ConfigError);
    EXPECT_THROW(parse_config(std::string(kMinimal) + "costs: {preset: impact_k_99}\n"), ConfigError);
    EXPECT_THROW(parse_config(std::string(kMinimal) + "portfolio: {smoothing: 0}\n"), ConfigError);
    EXPECT_THROW(parse_config("seed: [1\n"), ConfigError);
    EXPECT_THROW(parse_config("seed: 1\n"), ConfigError); // no features or schedule
    const auto k2 = parse_config(std::string(kMinimal) + "costs: {preset: impact_k_02}\n");
    EXPECT_EQ(k2.costs.impact_k, 0.2);
}

TEST(Config, FailsFastOnMissingColumn) {
    TempDir dir;
    write(dir.path() / "panel.csv", "id,date,close\nA,2020-01-01,1\nA,2020-01-02,1.1\n");
    write(dir.path() / "feats.txt", "f = cs_rank(col(volume))\n");
    write(dir.path() / "cfg.yaml", R"(
data: {panel: panel.csv}
features: {manifest: feats.txt}
liquidity: {enabled: false}
costs: {mode: static}
schedule: {train_start: 2020-01-01, train_end: 2020-01-01, test_start: 2020-01-02, test_end: 2020-01-02}
output: {dir: out}
)");
    const auto c = load_config(dir.path() / "cfg.yaml");
    try {
        run_experiment(c);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("volume"), std::string::npos);
    }
    EXPECT_FALSE(fs::exists(dir.path() / "out"));
}

TEST(Synthetic, ReproducibleAndSeedSensitive) {
    SyntheticSpec s;
    s.n_securities = 8;
    s.n_days = 50;
    s.seed = 42;
    const auto a = generate_synthetic(s);
    const auto b = generate_synthetic(s);
    std::ostringstream pa, pb;
    write_panel(pa, a.panel);
    write_panel(pb, b.panel);
    EXPECT_EQ(pa.str(), pb.str());
    s.seed = 43;
    std::ostringstream pc;
    write_panel(pc, generate_synthetic(s).panel);
    EXPECT_NE(pa.str(), pc.str());
    EXPECT_EQ(a.truth.size(), 1u);
    EXPECT_EQ(a.factors.names.size(), 6u);
    EXPECT_NE(derive_seed(1, "learner"), derive_seed(1, "bootstrap"));
    EXPECT_EQ(derive_seed(1, "learner"), derive_seed(1, "learner"));
}

TEST(Report, EmptyStrategyListGivesHeaders) {
    const auto a = panel_a({});
    EXPECT_EQ(to_delimited(a), "Strategy,SR,Return,Vol,MaxDD,IC,Hit,Total\n");
    const auto b = panel_b({}, {});
    EXPECT_EQ(to_delimited(b), "Strategy,Features,Avg SR,SR Std,Best Yr,Worst Yr,Calmar\n");
    EXPECT_TRUE(panel_c({}, {}).rows.empty());
}

TEST(Report, SingleStrategyCorrelation) {
    const std::vector<std::string> names{"Only"};
    const auto c = panel_c(names, {{1.0}});
    ASSERT_EQ(c.rows.size(), 1u);
    ASSERT_EQ(c.rows[0].size(), 2u);
    EXPECT_EQ(c.rows[0][1].value, 1.0);
    EXPECT_NE(to_markdown(c).find("1.00"), std::string::npos);
}

TEST(Report, MissingCellsPrintNa) {
    Table t{"t", "T", {"A", "B"}, {{Cell::str("x"), Cell::num(kMissing, 2)}}, {}};
    EXPECT_NE(to_markdown(t).find("NA"), std::string::npos);
}

TEST(Experiment, EmptyStrategyListWritesHeaderOnlyTables) {
    TempDir dir;
    write(dir.path() / "feats.txt", "f = cs_rank(col(sig1))\n");
    write(dir.path() / "cfg.yaml", std::string(kMinimal) + "strategies: []\noutput: {dir: out, format: delimited}\n");
    const auto c = load_config(dir.path() / "cfg.yaml");
    run_experiment(c);
    EXPECT_EQ(slurp(dir.path() / "out" / "panel_a.csv"), "Strategy,SR,Return,Vol,MaxDD,IC,Hit,Total\n");
}

TEST(Experiment, GoldenReport) {
    TempDir dir;
    auto c = load_config(kGolden / "config.yaml");
    c.output.dir = dir.path() / "out";
    run_experiment(c);
    const fs::path expected = kGolden / "expected";
    if (std::getenv("XSALPHA_UPDATE_GOLDEN")) {
        fs::remove_all(expected);
        fs::create_directories(expected);
        for (const auto& e : fs::directory_iterator(c.output.dir)) {
            const auto ext = e.path().extension();
            const auto name = e.path().filename();
            if (ext == ".md" || (ext == ".csv" && name != "weights.csv" && name != "trades.csv"))
                fs::copy_file(e.path(), expected / e.path().filename());
        }
        GTEST_SKIP() << "fixture regenerated";
    }
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(expected)) {
        const auto got = c.output.dir / e.path().filename();
        ASSERT_TRUE(fs::exists(got)) << got;
        EXPECT_EQ(slurp(got), slurp(e.path())) << e.path().filename();
        ++compared;
    }
    EXPECT_GE(compared, 20u);
}

TEST(Experiment, Deterministic) {
    TempDir dir;
    auto c = load_config(kGolden / "config.yaml");
    const unsigned before = max_jobs();
    set_max_jobs(1);
    c.output.dir = dir.path() / "a";
    run_experiment(c);
    set_max_jobs(3);
    c.output.dir = dir.path() / "b";
    run_experiment(c);
    set_max_jobs(before);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir.path() / "a")) {
        EXPECT_EQ(slurp(e.path()), slurp(dir.path() / "b" / e.path().filename())) << e.path().filename();
        ++files;
    }
    EXPECT_GT(files, 20u);
}

TEST(Experiment, ReplacesExistingOutput) {
    TempDir dir;
    fs::create_directories(dir.path() / "out");
    write(dir.path() / "out" / "stale.txt", "old");
    auto c = load_config(kGolden / "config.yaml");
    c.output.dir = dir.path() / "out";
    c.optimizer_enabled = false;
    run_experiment(c, ExperimentScope::decay);
    EXPECT_FALSE(fs::exists(dir.path() / "out" / "stale.txt"));
    EXPECT_TRUE(fs::exists(dir.path() / "out" / "decay.md"));
}
