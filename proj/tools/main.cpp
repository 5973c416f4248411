#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "xsalpha/config.hpp"
#include "xsalpha/errors.hpp"
#include "xsalpha/experiment.hpp"
#include "xsalpha/feature_dsl.hpp"
#include "xsalpha/panel_store.hpp"
#include "xsalpha/parallel.hpp"
#include "xsalpha/report.hpp"
#include "xsalpha/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 0;
    std::string out;
    std::string manifest;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
    auto* opt = cmd->add_option("--config", c.config, "Experiment configuration (YAML)");
    if (config_required) opt->required();
    cmd->add_option("--seed", c.seed, "Override the root seed");
    cmd->add_option("--jobs", c.jobs, "Maximum worker threads (0 = hardware concurrency)");
    cmd->add_option("--out", c.out, "Output directory");
}

xsa::ExperimentConfig load(const Common& c) {
    auto cfg = xsa::load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out.empty()) cfg.output.dir = c.out;
    return cfg;
}

void apply_jobs(const Common& c, const xsa::ExperimentConfig* cfg) {
    unsigned jobs = c.jobs;
    if (jobs == 0 && cfg) jobs = cfg->jobs;
    if (jobs > 0) xsa::set_max_jobs(jobs);
}

int cmd_run(const Common& c, xsa::ExperimentScope scope) {
    const auto cfg = load(c);
    apply_jobs(c, &cfg);
    const auto result = xsa::run_experiment(cfg, scope);
    for (const auto& t : result.tables)
        if (scope != xsa::ExperimentScope::full) fmt::print("{}\n", xsa::to_markdown(t));
    fmt::print(stderr, "wrote {}\n", result.output_dir.string());
    return kOk;
}

void write_factors(const fs::path& path, const xsa::FactorPanel& f) {
    std::ofstream out(path, std::ios::binary);
    out << "date";
    for (const auto& n : f.names) out << ',' << n;
    out << ",RF\n";
    for (std::size_t t = 0; t < f.dates.size(); ++t) {
        out << xsa::format_date(f.dates[t]);
        for (const auto& col : f.columns) out << ',' << xsa::format_double(col[t]);
        out << ',' << xsa::format_double(t < f.rf.size() ? f.rf[t] : 0.0) << '\n';
    }
    if (!out) throw xsa::DataError("cannot write " + path.string());
}

int cmd_synth(const Common& c) {
    xsa::SyntheticSpec spec;
    std::uint64_t seed = 0;
    fs::path dir = "synthetic";
    if (!c.config.empty()) {
        const auto cfg = load(c);
        if (!cfg.synthetic) throw xsa::ConfigError("config has no 'synthetic' section");
        spec = *cfg.synthetic;
        seed = cfg.seed;
    }
    if (c.seed) seed = *c.seed;
    if (!c.out.empty()) dir = c.out;
    apply_jobs(c, nullptr);
    spec.seed = seed;
    const auto data = xsa::generate_synthetic(spec);
    fs::create_directories(dir);
    xsa::write_panel(dir / "panel.csv", data.panel);
    write_factors(dir / "factors.csv", data.factors);
    std::ofstream truth(dir / "truth.csv", std::ios::binary);
    truth << "signal,beta,phi\n";
    for (const auto& s : data.truth)
        truth << s.name << ',' << xsa::format_double(s.beta) << ',' << xsa::format_double(s.phi) << '\n';
    fmt::print(stderr, "wrote {} rows to {}\n", data.panel.rows(), dir.string());
    return kOk;
}

struct Manifest {
    std::vector<xsa::fx::FeatureDef> defs;
    std::optional<std::vector<std::string>> declared;
};

Manifest load_manifest(const Common& c) {
    Manifest m;
    fs::path path = c.manifest;
    if (path.empty()) {
        if (c.config.empty()) throw xsa::ConfigError("pass --config or --manifest");
        path = load(c).feature_manifest;
    }
    try {
        m.defs = xsa::fx::load_feature_manifest(path);
    } catch (const xsa::fx::ParseError& e) {
        throw xsa::ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return m;
}

int cmd_validate(const Common& c) {
    if (!c.config.empty() && c.manifest.empty()) {
        // Full fail-fast validation, including column references.
        xsa::validate_config(load(c));
    }
    const auto m = load_manifest(c);
    int bad = 0;
    for (const auto& d : m.defs) {
        const auto report = xsa::fx::check_point_in_time(*d.expr);
        if (report.passed()) {
            fmt::print("ok    {}\n", d.name);
            continue;
        }
        ++bad;
        for (const auto& v : report.violations) fmt::print("FAIL  {} at {}: {}\n", d.name, v.path, v.message);
    }
    fmt::print("{} features, {} failed\n", m.defs.size(), bad);
    return bad == 0 ? kOk : kConfig;
}

int cmd_patterns(const Common& c) {
    const auto m = load_manifest(c);
    std::vector<xsa::fx::ExprPtr> corpus;
    for (const auto& d : m.defs) corpus.push_back(d.expr);
    const auto table = xsa::pattern_table(xsa::fx::analyze_patterns(corpus));
    fmt::print("{}", xsa::to_markdown(table));
    if (!c.out.empty()) {
        const xsa::Table tables[] = {table};
        xsa::emit_report(tables, c.out, {});
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-sectional equity alpha research pipeline"};
    app.require_subcommand(1);
    Common common;

    auto* run = app.add_subcommand("run", "Run the full experiment and write the report directory");
    add_common(run, common, true);
    auto* synth = app.add_subcommand("synth", "Generate a synthetic panel with planted signals");
    add_common(synth, common, false);
    auto* validate = app.add_subcommand("validate-features", "Check a feature manifest for point-in-time violations");
    add_common(validate, common, false);
    validate->add_option("--manifest", common.manifest, "Feature manifest (instead of --config)");
    auto* patterns = app.add_subcommand("analyze-patterns", "Report feature pattern prevalence for a manifest");
    add_common(patterns, common, false);
    patterns->add_option("--manifest", common.manifest, "Feature manifest (instead of --config)");
    auto* decay = app.add_subcommand("decay", "Alpha decay across execution lags");
    add_common(decay, common, true);
    auto* optimize = app.add_subcommand("optimize-compare", "Compare naive and optimized portfolio construction");
    add_common(optimize, common, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*run) return cmd_run(common, xsa::ExperimentScope::full);
        if (*synth) return cmd_synth(common);
        if (*validate) return cmd_validate(common);
        if (*patterns) return cmd_patterns(common);
        if (*decay) return cmd_run(common, xsa::ExperimentScope::decay);
        if (*optimize) return cmd_run(common, xsa::ExperimentScope::optimizer);
    } catch (const xsa::ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfig;
    } catch (const xsa::fx::ParseError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfig;
    } catch (const xsa::DataError& e) {
        fmt::print(stderr, "data error: {}\n", e.what());
        return kData;
    } catch (const xsa::NumericError& e) {
        fmt::print(stderr, "numeric failure: {}\n", e.what());
        return kNumeric;
    } catch (const std::invalid_argument& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfig;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kFailure;
    }
    return kFailure;
}
