#include <algorithm>
#include <set>
#include <stdexcept>

#include "xsalpha/feature_dsl.hpp"

namespace xsa::fx {

namespace {

template <class Pred>
bool any_node(const Expr& e, Pred&& pred) {
    if (pred(e)) return true;
    bool found = false;
    for_each_child(e, [&](const Expr& c) { found = found || any_node(c, pred); });
    return found;
}

void collect_columns(const Expr& e, std::set<std::string>& out) {
    if (const auto* c = std::get_if<ColumnRef>(&e.node)) out.insert(c->name);
    for_each_child(e, [&](const Expr& c) { collect_columns(c, out); });
}

void collect_windows(const Expr& e, std::vector<std::int64_t>& out) {
    if (const auto* r = std::get_if<Rolling>(&e.node)) out.push_back(r->window);
    if (const auto* w = std::get_if<EwmMean>(&e.node)) out.push_back(w->span);
    if (const auto* z = std::get_if<TsZScore>(&e.node)) out.push_back(z->window);
    for_each_child(e, [&](const Expr& c) { collect_windows(c, out); });
}

bool is_dispersion(const Expr& e) {
    if (const auto* r = std::get_if<Rolling>(&e.node)) return r->kind == RollingKind::std;
    if (const auto* w = std::get_if<EwmMean>(&e.node)) {
        const auto* u = std::get_if<Unary>(&w->arg->node);
        return u && u->op == UnaryOp::abs;
    }
    return false;
}

bool is_trend(const Expr& e) {
    if (const auto* r = std::get_if<Rolling>(&e.node)) return r->kind == RollingKind::mean;
    if (std::holds_alternative<EwmMean>(e.node)) return true;
    if (const auto* b = std::get_if<Binary>(&e.node)) {
        if (b->op != BinaryOp::sub) return false;
        const auto has_lag = [](const Expr& x) { return std::holds_alternative<Lag>(x.node); };
        return any_node(*b->lhs, has_lag) || any_node(*b->rhs, has_lag);
    }
    return false;
}

const Binary* as_div(const Expr& e) {
    const auto* b = std::get_if<Binary>(&e.node);
    return b && b->op == BinaryOp::div ? b : nullptr;
}

bool is_regime_division(const Expr& e) {
    const auto* d = as_div(e);
    return d && any_node(*d->rhs, is_dispersion);
}

std::string window_bucket(std::int64_t w) {
    if (w == 5) return "5";
    if (w == 10) return "10";
    if (w == 20 || w == 21) return "20-21";
    if (w == 60) return "60";
    return "other";
}

} // namespace

PatternFlags classify_feature(const Expr& expr) {
    PatternFlags f;
    any_node(expr, [&](const Expr& e) {
        if (!std::holds_alternative<ColumnRef>(e.node) && !std::holds_alternative<Constant>(e.node)) ++f.operations;
        return false;
    });

    const Expr* root = &expr;
    while (const auto* fill = std::get_if<FillMissing>(&root->node)) root = fill->arg.get();
    f.cross_sectional_ranking =
        std::holds_alternative<CsRank>(root->node) || std::holds_alternative<CsZScore>(root->node);

    f.regime_normalization = any_node(expr, is_regime_division);

    f.variable_interactions = any_node(expr, [](const Expr& e) {
        const auto* b = std::get_if<Binary>(&e.node);
        if (!b || (b->op != BinaryOp::mul && b->op != BinaryOp::div)) return false;
        std::set<std::string> lhs, rhs;
        collect_columns(*b->lhs, lhs);
        collect_columns(*b->rhs, rhs);
        return !lhs.empty() && !rhs.empty() && lhs != rhs;
    });

    f.multi_timeframe = any_node(expr, [](const Expr& e) {
        const auto* b = std::get_if<Binary>(&e.node);
        if (!b) return false;
        std::vector<std::int64_t> lhs, rhs;
        collect_windows(*b->lhs, lhs);
        collect_windows(*b->rhs, rhs);
        if (lhs.empty() || rhs.empty()) return false;
        return std::set<std::int64_t>(lhs.begin(), lhs.end()) != std::set<std::int64_t>(rhs.begin(), rhs.end());
    });

    f.outlier_zscoring = any_node(expr, [](const Expr& e) {
        if (std::holds_alternative<TsZScore>(e.node)) return true;
        const auto* d = as_div(e);
        if (!d) return false;
        const auto* num = std::get_if<Binary>(&d->lhs->node);
        if (!num || num->op != BinaryOp::sub) return false;
        const auto* mean = std::get_if<Rolling>(&num->rhs->node);
        return mean && mean->kind == RollingKind::mean && any_node(*d->rhs, is_dispersion);
    });

    f.momentum_adjustment = any_node(expr, [](const Expr& e) {
        const auto* d = as_div(e);
        return d && is_regime_division(e) && any_node(*d->lhs, is_trend);
    });

    collect_windows(expr, f.windows);
    return f;
}

PatternStats analyze_patterns(std::span<const ExprPtr> corpus) {
    if (corpus.empty()) throw std::invalid_argument("analyze_patterns: corpus is empty");
    PatternStats s;
    s.features = corpus.size();
    std::map<std::string, std::size_t> buckets;
    std::size_t rank = 0, regime = 0, inter = 0, multi = 0, outlier = 0, momentum = 0;
    for (const auto& e : corpus) {
        const auto f = classify_feature(*e);
        s.operation_counts.push_back(f.operations);
        rank += f.cross_sectional_ranking;
        regime += f.regime_normalization;
        inter += f.variable_interactions;
        multi += f.multi_timeframe;
        outlier += f.outlier_zscoring;
        momentum += f.momentum_adjustment;
        for (auto w : f.windows) ++buckets[window_bucket(w)];
        s.window_specs += f.windows.size();
    }
    const auto n = static_cast<double>(s.features);
    s.cross_sectional_ranking = static_cast<double>(rank) / n;
    s.regime_normalization = static_cast<double>(regime) / n;
    s.variable_interactions = static_cast<double>(inter) / n;
    s.multi_timeframe = static_cast<double>(multi) / n;
    s.outlier_zscoring = static_cast<double>(outlier) / n;
    s.momentum_adjustment = static_cast<double>(momentum) / n;

    double total_ops = 0.0;
    for (auto c : s.operation_counts) total_ops += static_cast<double>(c);
    s.mean_operations = total_ops / n;
    std::vector<std::size_t> sorted = s.operation_counts;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    s.median_operations = sorted.size() % 2 == 1
                              ? static_cast<double>(sorted[mid])
                              : 0.5 * static_cast<double>(sorted[mid - 1] + sorted[mid]);

    for (const auto& [bucket, count] : buckets)
        s.window_histogram[bucket] = static_cast<double>(count) / static_cast<double>(s.window_specs);
    return s;
}

} // namespace xsa::fx
