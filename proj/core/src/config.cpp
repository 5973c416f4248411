#include "xsalpha/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "xsalpha/errors.hpp"
#include "xsalpha/feature_dsl.hpp"

namespace xsa {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) fail(fmt::format("'{}' must be a mapping", where));
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            fail(fmt::format("unknown key '{}' in '{}'", key, where));
    }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
    const auto v = node[key];
    if (!v) return;
    try {
        out = v.as<T>();
    } catch (const YAML::Exception&) {
        fail(fmt::format("'{}.{}' has the wrong type", where, key));
    }
}

template <class T>
void read_list(const YAML::Node& node, const char* key, std::vector<T>& out, const std::string& where) {
    const auto v = node[key];
    if (!v) return;
    if (!v.IsSequence()) fail(fmt::format("'{}.{}' must be a list", where, key));
    out.clear();
    for (const auto& item : v) {
        try {
            out.push_back(item.as<T>());
        } catch (const YAML::Exception&) {
            fail(fmt::format("'{}.{}' has an element of the wrong type", where, key));
        }
    }
}

Date read_date(const YAML::Node& node, const char* key, const std::string& where, Date fallback) {
    const auto v = node[key];
    if (!v) return fallback;
    const auto d = parse_date(v.as<std::string>());
    if (!d) fail(fmt::format("'{}.{}' is not a date: {}", where, key, v.as<std::string>()));
    return *d;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

char delimiter_for(const fs::path& path, char configured) {
    if (configured != '\0') return configured;
    return path.extension() == ".tsv" ? '\t' : ',';
}

std::vector<std::string> read_header(const fs::path& path, char delimiter) {
    std::ifstream in(path);
    if (!in) fail(fmt::format("cannot open '{}'", path.string()));
    std::string line;
    if (!std::getline(in, line)) fail(fmt::format("'{}' is empty", path.string()));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, delimiter)) out.push_back(field);
    return out;
}

void parse_data(const YAML::Node& n, const fs::path& base, ExperimentConfig& c) {
    check_keys(n, "data", {"panel", "delimiter", "id_column", "date_column", "columns", "price_column",
                           "return_column", "cap_column", "sector_column", "bid_column", "ask_column",
                           "dollar_volume_column", "factors"});
    auto& d = c.data;
    std::string s;
    read(n, "panel", s, "data");
    d.panel = resolve(base, s);
    s.clear();
    read(n, "factors", s, "data");
    d.factors = resolve(base, s);
    std::string delim;
    read(n, "delimiter", delim, "data");
    if (delim == "tab" || delim == "\\t") d.format.delimiter = '\t';
    else if (delim.size() == 1) d.format.delimiter = delim[0];
    else if (!delim.empty()) fail("'data.delimiter' must be a single character or 'tab'");
    read(n, "id_column", d.format.id_column, "data");
    read(n, "date_column", d.format.date_column, "data");
    read_list(n, "columns", d.format.value_columns, "data");
    read(n, "price_column", d.price_column, "data");
    read(n, "return_column", d.return_column, "data");
    read(n, "cap_column", d.cap_column, "data");
    read(n, "sector_column", d.sector_column, "data");
    read(n, "bid_column", d.cost_columns.bid, "data");
    read(n, "ask_column", d.cost_columns.ask, "data");
    read(n, "dollar_volume_column", d.cost_columns.dollar_volume, "data");
    d.cost_columns.ret = d.return_column;
}

SyntheticSpec parse_synthetic(const YAML::Node& n) {
    check_keys(n, "synthetic", {"n_securities", "n_days", "start", "noise_vol", "market_mean", "market_vol",
                                "n_sectors", "signals"});
    SyntheticSpec s;
    read(n, "n_securities", s.n_securities, "synthetic");
    read(n, "n_days", s.n_days, "synthetic");
    s.start = read_date(n, "start", "synthetic", s.start);
    read(n, "noise_vol", s.noise_vol, "synthetic");
    read(n, "market_mean", s.market_mean, "synthetic");
    read(n, "market_vol", s.market_vol, "synthetic");
    read(n, "n_sectors", s.n_sectors, "synthetic");
    if (const auto sig = n["signals"]) {
        if (!sig.IsSequence()) fail("'synthetic.signals' must be a list");
        s.signals.clear();
        for (const auto& item : sig) {
            check_keys(item, "synthetic.signals[]", {"name", "beta", "phi"});
            SignalSpec spec;
            read(item, "name", spec.name, "synthetic.signals[]");
            read(item, "beta", spec.beta, "synthetic.signals[]");
            read(item, "phi", spec.phi, "synthetic.signals[]");
            s.signals.push_back(spec);
        }
    }
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    return s;
}

ConstructionKind parse_kind(const std::string& s) {
    if (s == "naive") return ConstructionKind::naive;
    if (s == "sector_neutral") return ConstructionKind::sector_neutral;
    if (s == "pure_alpha") return ConstructionKind::pure_alpha;
    fail(fmt::format("unknown optimizer variant kind '{}'", s));
}

std::vector<ConstructionVariant> default_variants() {
    return {{ConstructionKind::naive, 1.0, "Naive (prediction-weighted)"},
            {ConstructionKind::sector_neutral, 0.02, "Sector-Neutral (2% cap)"},
            {ConstructionKind::sector_neutral, 0.01, "Sector-Neutral (1% cap)"},
            {ConstructionKind::pure_alpha, 0.01, "Pure Alpha Optimization"}};
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        fail(fmt::format("YAML syntax error: {}", e.what()));
    }
    if (!root.IsMap()) fail("top level must be a mapping");
    check_keys(root, "<root>", {"seed", "jobs", "data", "synthetic", "universe", "features", "strategies", "ensemble",
                                "baseline", "learner", "schedule", "horizon_lag", "portfolio", "costs", "liquidity",
                                "inference", "decay", "optimizer", "output"});
    ExperimentConfig c;
    read(root, "seed", c.seed, "<root>");
    read(root, "jobs", c.jobs, "<root>");
    if (const auto n = root["data"]) parse_data(n, base_dir, c);
    if (const auto n = root["synthetic"]) c.synthetic = parse_synthetic(n);
    if (c.data.panel.empty() && !c.synthetic) fail("either 'data.panel' or 'synthetic' is required");
    if (!c.data.panel.empty() && c.synthetic) fail("'data.panel' and 'synthetic' are mutually exclusive");

    if (const auto n = root["universe"]) {
        check_keys(n, "universe", {"top_k", "exclusion_flags"});
        c.universe_enabled = true;
        read(n, "top_k", c.universe.top_k, "universe");
        read_list(n, "exclusion_flags", c.universe.exclusion_flags, "universe");
        if (c.universe.top_k < 1) fail("'universe.top_k' must be >= 1");
    }
    c.universe.cap_column = c.data.cap_column;

    const auto feat = root["features"];
    if (!feat) fail("'features' section is required");
    check_keys(feat, "features", {"manifest", "standardize"});
    std::string manifest;
    read(feat, "manifest", manifest, "features");
    if (manifest.empty()) fail("'features.manifest' is required");
    c.feature_manifest = resolve(base_dir, manifest);
    read(feat, "standardize", c.standardize_features, "features");

    if (const auto n = root["strategies"]) {
        if (!n.IsSequence()) fail("'strategies' must be a list");
        std::set<std::string> seen;
        for (const auto& item : n) {
            check_keys(item, "strategies[]", {"name", "features"});
            StrategyConfig s;
            read(item, "name", s.name, "strategies[]");
            read_list(item, "features", s.features, "strategies[]");
            if (s.name.empty()) fail("every strategy needs a name");
            if (!seen.insert(s.name).second) fail(fmt::format("duplicate strategy '{}'", s.name));
            c.strategies.push_back(std::move(s));
        }
    } else {
        c.strategies.push_back({"All", {}});
    }
    read(root, "ensemble", c.ensemble, "<root>");
    read(root, "baseline", c.baseline, "<root>");
    if (c.ensemble && std::any_of(c.strategies.begin(), c.strategies.end(),
                                  [](const StrategyConfig& s) { return s.name == "Ensemble"; }))
        fail("strategy name 'Ensemble' is reserved when 'ensemble' is on");

    if (const auto n = root["learner"]) {
        check_keys(n, "learner", {"n_trees", "max_depth", "learning_rate", "min_leaf_count", "l2_leaf_penalty",
                                  "subsample_fraction"});
        read(n, "n_trees", c.learner.n_trees, "learner");
        read(n, "max_depth", c.learner.max_depth, "learner");
        read(n, "learning_rate", c.learner.learning_rate, "learner");
        read(n, "min_leaf_count", c.learner.min_leaf_count, "learner");
        read(n, "l2_leaf_penalty", c.learner.l2_leaf_penalty, "learner");
        read(n, "subsample_fraction", c.learner.subsample_fraction, "learner");
    }
    try {
        c.learner.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }

    const auto sched = root["schedule"];
    if (!sched) fail("'schedule' section is required");
    check_keys(sched, "schedule", {"train_start", "train_end", "test_start", "test_end", "refit_interval", "mode"});
    for (const char* k : {"train_start", "train_end", "test_start", "test_end"})
        if (!sched[k]) fail(fmt::format("'schedule.{}' is required", k));
    c.schedule.train_start = read_date(sched, "train_start", "schedule", {});
    c.schedule.train_end = read_date(sched, "train_end", "schedule", {});
    c.schedule.test_start = read_date(sched, "test_start", "schedule", {});
    c.schedule.test_end = read_date(sched, "test_end", "schedule", {});
    read(sched, "refit_interval", c.schedule.refit_interval, "schedule");
    std::string mode = "expanding";
    read(sched, "mode", mode, "schedule");
    if (mode == "expanding") c.schedule.mode = WindowMode::expanding;
    else if (mode == "rolling") c.schedule.mode = WindowMode::rolling;
    else fail(fmt::format("'schedule.mode' must be expanding or rolling, got '{}'", mode));

    read(root, "horizon_lag", c.horizon_lag, "<root>");
    if (c.horizon_lag < 0) fail("'horizon_lag' must be >= 0");
    c.schedule.target_lag = c.horizon_lag;
    try {
        c.schedule.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }

    if (const auto n = root["portfolio"]) {
        check_keys(n, "portfolio", {"smoothing", "smoothing_sweep", "rebalance", "winsor_clip"});
        read(n, "smoothing", c.portfolio.smoothing_window, "portfolio");
        read_list(n, "smoothing_sweep", c.smoothing_sweep, "portfolio");
        read(n, "winsor_clip", c.portfolio.winsor_clip, "portfolio");
        std::string reb = "daily";
        read(n, "rebalance", reb, "portfolio");
        const auto f = parse_rebalance_frequency(reb);
        if (!f) fail(fmt::format("'portfolio.rebalance' must be daily, weekly or monthly, got '{}'", reb));
        c.portfolio.rebalance = *f;
    }
    if (c.portfolio.smoothing_window < 1) fail("'portfolio.smoothing' must be >= 1");
    if (!(c.portfolio.winsor_clip > 0.0)) fail("'portfolio.winsor_clip' must be > 0");
    for (int w : c.smoothing_sweep)
        if (w < 1) fail("'portfolio.smoothing_sweep' entries must be >= 1");

    if (const auto n = root["costs"]) {
        check_keys(n, "costs", {"preset", "mode", "impact_k", "static_bps", "aum", "round_trip", "vol_window",
                                "adv_window"});
        std::string preset = "impact_k_03";
        read(n, "preset", preset, "costs");
        if (preset == "impact_k_03") c.costs = CostParams::impact_k_03();
        else if (preset == "impact_k_02") c.costs = CostParams::impact_k_02();
        else fail(fmt::format("'costs.preset' must be impact_k_03 or impact_k_02, got '{}'", preset));
        std::string cm = "spread_impact";
        read(n, "mode", cm, "costs");
        if (cm == "spread_impact") c.costs.mode = CostMode::spread_impact;
        else if (cm == "static") c.costs.mode = CostMode::static_bps;
        else fail(fmt::format("'costs.mode' must be spread_impact or static, got '{}'", cm));
        read(n, "impact_k", c.costs.impact_k, "costs");
        read(n, "static_bps", c.costs.static_cost_bps, "costs");
        read(n, "aum", c.costs.aum, "costs");
        read(n, "round_trip", c.costs.round_trip, "costs");
        read(n, "vol_window", c.costs.vol_window, "costs");
        read(n, "adv_window", c.costs.adv_window, "costs");
    }
    try {
        c.costs.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }

    if (const auto n = root["liquidity"]) {
        check_keys(n, "liquidity", {"enabled", "min_adv_dollars", "max_spread_bps"});
        read(n, "enabled", c.liquidity_enabled, "liquidity");
        read(n, "min_adv_dollars", c.liquidity.min_adv_dollars, "liquidity");
        read(n, "max_spread_bps", c.liquidity.max_spread_bps, "liquidity");
    }

    if (const auto n = root["inference"]) {
        check_keys(n, "inference", {"nw_lags", "bootstrap_resamples", "bootstrap_level", "block_mean",
                                    "factor_lags", "factor_shift", "min_factor_observations"});
        read(n, "nw_lags", c.nw_lags, "inference");
        read(n, "bootstrap_resamples", c.bootstrap.resamples, "inference");
        read(n, "bootstrap_level", c.bootstrap.level, "inference");
        read(n, "block_mean", c.bootstrap.block_mean, "inference");
        read(n, "factor_lags", c.attribution.lags, "inference");
        read(n, "factor_shift", c.attribution.shift, "inference");
        read(n, "min_factor_observations", c.attribution.min_observations, "inference");
    }
    if (c.nw_lags < 0 || c.attribution.lags < 0) fail("Newey-West lags must be >= 0");
    if (c.bootstrap.resamples < 1) fail("'inference.bootstrap_resamples' must be >= 1");
    if (!(c.bootstrap.level > 0.0 && c.bootstrap.level < 1.0)) fail("'inference.bootstrap_level' must be in (0, 1)");

    if (const auto n = root["decay"]) {
        check_keys(n, "decay", {"lags"});
        read_list(n, "lags", c.decay_lags, "decay");
    }
    for (int l : c.decay_lags)
        if (l < 0) fail("'decay.lags' entries must be >= 0");

    if (const auto n = root["optimizer"]) {
        check_keys(n, "optimizer", {"enabled", "variants", "lambda_tc", "lambda_risk", "risk", "max_iters", "rel_tol"});
        c.optimizer_enabled = true;
        read(n, "enabled", c.optimizer_enabled, "optimizer");
        read(n, "lambda_tc", c.lambda_tc, "optimizer");
        read(n, "lambda_risk", c.lambda_risk, "optimizer");
        read(n, "max_iters", c.solver.max_iters, "optimizer");
        read(n, "rel_tol", c.solver.rel_tol, "optimizer");
        std::string risk = "sector_factor";
        read(n, "risk", risk, "optimizer");
        if (risk == "sector_factor") c.risk_kind = RiskKind::sector_factor;
        else if (risk == "diagonal") c.risk_kind = RiskKind::diagonal;
        else fail(fmt::format("'optimizer.risk' must be sector_factor or diagonal, got '{}'", risk));
        if (const auto v = n["variants"]) {
            if (!v.IsSequence()) fail("'optimizer.variants' must be a list");
            for (const auto& item : v) {
                check_keys(item, "optimizer.variants[]", {"kind", "w_max", "label"});
                std::string kind;
                read(item, "kind", kind, "optimizer.variants[]");
                ConstructionVariant var;
                var.kind = parse_kind(kind);
                read(item, "w_max", var.w_max, "optimizer.variants[]");
                read(item, "label", var.label, "optimizer.variants[]");
                if (!(var.w_max > 0.0)) fail("'optimizer.variants[].w_max' must be > 0");
                if (var.label.empty()) var.label = kind;
                c.optimizer_variants.push_back(std::move(var));
            }
        } else {
            c.optimizer_variants = default_variants();
        }
        if (c.lambda_tc < 0.0 || c.lambda_risk < 0.0) fail("optimizer lambdas must be >= 0");
    }

    if (const auto n = root["output"]) {
        check_keys(n, "output", {"dir", "format"});
        std::string dir;
        read(n, "dir", dir, "output");
        if (!dir.empty()) c.output.dir = dir;
        std::string format = "both";
        read(n, "format", format, "output");
        if (format == "markdown") c.output.delimited = false;
        else if (format == "delimited") c.output.markdown = false;
        else if (format != "both") fail(fmt::format("'output.format' must be markdown, delimited or both, got '{}'", format));
    }
    c.output.dir = resolve(base_dir, c.output.dir.string());
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(fmt::format("cannot open '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    auto c = parse_config(ss.str(), path.parent_path());
    c.source = path;
    return c;
}

std::vector<std::string> required_columns(const ExperimentConfig& c) {
    std::vector<std::string> cols{c.data.return_column};
    if (c.universe_enabled) {
        cols.push_back(c.universe.cap_column);
        for (const auto& f : c.universe.exclusion_flags) cols.push_back(f);
    }
    if (c.costs.mode == CostMode::spread_impact || c.liquidity_enabled || c.optimizer_enabled) {
        cols.push_back(c.data.cost_columns.bid);
        cols.push_back(c.data.cost_columns.ask);
        cols.push_back(c.data.cost_columns.dollar_volume);
    }
    return cols;
}

void validate_config(const ExperimentConfig& c) {
    std::vector<std::string> available;
    if (c.synthetic) {
        available = {"close", "ret"};
        for (const auto& s : c.synthetic->signals) available.push_back(s.name);
        for (const char* col : {"cap", "dollar_volume", "bid", "ask", "sector"}) available.emplace_back(col);
        if (c.data.return_column != "ret" || c.data.price_column != "close")
            fail("synthetic panels use the columns 'close' and 'ret'");
    } else {
        if (!fs::is_regular_file(c.data.panel)) fail(fmt::format("panel file '{}' does not exist", c.data.panel.string()));
        const auto header = read_header(c.data.panel, delimiter_for(c.data.panel, c.data.format.delimiter));
        auto has = [&](const std::string& name) { return std::find(header.begin(), header.end(), name) != header.end(); };
        for (const auto& key : {c.data.format.id_column, c.data.format.date_column})
            if (!has(key)) fail(fmt::format("panel '{}' has no column '{}'", c.data.panel.string(), key));
        if (c.data.format.value_columns.empty()) {
            for (const auto& h : header)
                if (h != c.data.format.id_column && h != c.data.format.date_column) available.push_back(h);
        } else {
            for (const auto& col : c.data.format.value_columns) {
                if (!has(col)) fail(fmt::format("panel '{}' has no column '{}'", c.data.panel.string(), col));
                available.push_back(col);
            }
        }
        auto listed = [&](const std::string& name) {
            return std::find(available.begin(), available.end(), name) != available.end();
        };
        if (!listed(c.data.return_column)) {
            if (!listed(c.data.price_column))
                fail(fmt::format("panel has neither return column '{}' nor price column '{}'", c.data.return_column,
                                 c.data.price_column));
            available.push_back(c.data.return_column);
        }
    }
    auto listed = [&](const std::string& name) {
        return std::find(available.begin(), available.end(), name) != available.end();
    };
    for (const auto& col : required_columns(c))
        if (!listed(col)) fail(fmt::format("panel has no column '{}'", col));

    if (!fs::is_regular_file(c.feature_manifest))
        fail(fmt::format("feature manifest '{}' does not exist", c.feature_manifest.string()));
    std::vector<fx::FeatureDef> defs;
    try {
        defs = fx::load_feature_manifest(c.feature_manifest);
    } catch (const fx::ParseError& e) {
        fail(fmt::format("feature manifest '{}': {}", c.feature_manifest.string(), e.what()));
    } catch (const std::exception& e) {
        fail(fmt::format("feature manifest '{}': {}", c.feature_manifest.string(), e.what()));
    }
    if (defs.empty()) fail("feature manifest defines no features");
    std::set<std::string> names;
    for (const auto& d : defs) {
        if (listed(d.name)) fail(fmt::format("feature '{}' shadows a panel column", d.name));
        const auto report = fx::check_point_in_time(*d.expr, available);
        if (!report.passed()) {
            const auto& v = report.violations.front();
            fail(fmt::format("feature '{}' at {}: {}", d.name, v.path, v.message));
        }
        names.insert(d.name);
    }
    for (const auto& s : c.strategies)
        for (const auto& f : s.features)
            if (!names.count(f)) fail(fmt::format("strategy '{}' references unknown feature '{}'", s.name, f));
    if (!c.baseline.empty()) {
        const bool known = std::any_of(c.strategies.begin(), c.strategies.end(),
                                       [&](const StrategyConfig& s) { return s.name == c.baseline; }) ||
                           (c.ensemble && c.baseline == "Ensemble");
        if (!known) fail(fmt::format("baseline '{}' is not a strategy", c.baseline));
    }

    if (!c.data.factors.empty()) {
        if (!fs::is_regular_file(c.data.factors))
            fail(fmt::format("factor file '{}' does not exist", c.data.factors.string()));
        const auto header = read_header(c.data.factors, delimiter_for(c.data.factors, '\0'));
        if (header.size() < 2) fail(fmt::format("factor file '{}' needs a date column and a factor", c.data.factors.string()));
    }
}

} // namespace xsa
