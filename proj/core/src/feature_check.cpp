#include <algorithm>

#include <fmt/format.h>

#include "xsalpha/feature_dsl.hpp"

namespace xsa::fx {

namespace {

struct Checker {
    std::span<const std::string> columns;
    bool check_columns = false;
    ValidationReport report;

    void add(const std::string& path, std::string msg) { report.violations.push_back({path, std::move(msg)}); }

    void window_rules(const std::string& path, std::int64_t window, std::int64_t min_periods) {
        if (window < 1) add(path, fmt::format("window {} is less than 1", window));
        if (min_periods < 1) add(path, fmt::format("min_periods {} is less than 1", min_periods));
        if (window >= 1 && min_periods > window)
            add(path, fmt::format("min_periods exceeds window ({} > {})", min_periods, window));
    }

    void visit(const Expr& e, const std::string& path) {
        if (const auto* c = std::get_if<ColumnRef>(&e.node)) {
            if (check_columns && std::find(columns.begin(), columns.end(), c->name) == columns.end())
                add(path, fmt::format("undeclared column '{}'", c->name));
        } else if (const auto* l = std::get_if<Lag>(&e.node)) {
            if (l->days < 0) add(path, fmt::format("negative lag {}", l->days));
        } else if (const auto* r = std::get_if<Rolling>(&e.node)) {
            window_rules(path, r->window, r->min_periods);
            if (r->ddof != 0 && r->ddof != 1) add(path, fmt::format("ddof must be 0 or 1, got {}", r->ddof));
        } else if (const auto* w = std::get_if<EwmMean>(&e.node)) {
            if (w->span < 1) add(path, fmt::format("span {} is less than 1", w->span));
        } else if (const auto* z = std::get_if<TsZScore>(&e.node)) {
            window_rules(path, z->window, z->min_periods);
            if (z->ddof != 0 && z->ddof != 1) add(path, fmt::format("ddof must be 0 or 1, got {}", z->ddof));
            if (!(z->eps >= 0.0)) add(path, "eps must be non-negative");
        }

        if (const auto* b = std::get_if<Binary>(&e.node)) {
            visit(*b->lhs, path + ".lhs");
            visit(*b->rhs, path + ".rhs");
        } else {
            for_each_child(e, [&](const Expr& child) { visit(child, path + ".arg"); });
        }
    }
};

} // namespace

ValidationReport check_point_in_time(const Expr& expr) {
    Checker c;
    c.visit(expr, "$");
    return std::move(c.report);
}

ValidationReport check_point_in_time(const Expr& expr, std::span<const std::string> declared_columns) {
    Checker c;
    c.columns = declared_columns;
    c.check_columns = true;
    c.visit(expr, "$");
    return std::move(c.report);
}

} // namespace xsa::fx
