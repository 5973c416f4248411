#include "xsalpha/feature_expr.hpp"

#include <bit>
#include <cctype>

#include <fmt/format.h>

#include "xsalpha/types.hpp"

namespace xsa::fx {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool same_double(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool is_identifier(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
    return true;
}

std::string number_text(double v) {
    std::string s = format_double(v);
    if (v < 0.0 || (v == 0.0 && std::signbit(v))) return "(" + s + ")";
    return s;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string_view binary_symbol(BinaryOp op) {
    switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div: return "/";
    }
    return "?";
}

ExprPtr make(Node n) { return std::make_shared<const Expr>(Expr{std::move(n)}); }

} // namespace

bool operator==(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        overloaded{
            [&](const ColumnRef& x) { return x.name == std::get<ColumnRef>(b.node).name; },
            [&](const Constant& x) { return same_double(x.value, std::get<Constant>(b.node).value); },
            [&](const Unary& x) {
                const auto& y = std::get<Unary>(b.node);
                return x.op == y.op && *x.arg == *y.arg;
            },
            [&](const Binary& x) {
                const auto& y = std::get<Binary>(b.node);
                return x.op == y.op && *x.lhs == *y.lhs && *x.rhs == *y.rhs;
            },
            [&](const Lag& x) {
                const auto& y = std::get<Lag>(b.node);
                return x.days == y.days && *x.arg == *y.arg;
            },
            [&](const Rolling& x) {
                const auto& y = std::get<Rolling>(b.node);
                return x.kind == y.kind && x.window == y.window && x.min_periods == y.min_periods &&
                       x.ddof == y.ddof && *x.arg == *y.arg;
            },
            [&](const EwmMean& x) {
                const auto& y = std::get<EwmMean>(b.node);
                return x.span == y.span && *x.arg == *y.arg;
            },
            [&](const TsZScore& x) {
                const auto& y = std::get<TsZScore>(b.node);
                return x.window == y.window && x.min_periods == y.min_periods && x.ddof == y.ddof &&
                       same_double(x.eps, y.eps) && *x.arg == *y.arg;
            },
            [&](const CsRank& x) { return *x.arg == *std::get<CsRank>(b.node).arg; },
            [&](const CsZScore& x) { return *x.arg == *std::get<CsZScore>(b.node).arg; },
            [&](const FillMissing& x) {
                const auto& y = std::get<FillMissing>(b.node);
                return same_double(x.value, y.value) && *x.arg == *y.arg;
            },
        },
        a.node);
}

std::string to_string(const Expr& e) {
    return std::visit(
        overloaded{
            [](const ColumnRef& x) { return fmt::format("col({})", is_identifier(x.name) ? x.name : quote(x.name)); },
            [](const Constant& x) { return number_text(x.value); },
            [](const Unary& x) { return fmt::format("{}({})", function_name(x.op), to_string(*x.arg)); },
            [](const Binary& x) {
                return fmt::format("({} {} {})", to_string(*x.lhs), binary_symbol(x.op), to_string(*x.rhs));
            },
            [](const Lag& x) { return fmt::format("lag({}, {})", to_string(*x.arg), x.days); },
            [](const Rolling& x) {
                if (x.kind == RollingKind::std)
                    return fmt::format("rolling_std({}, {}, min_periods={}, ddof={})", to_string(*x.arg), x.window,
                                       x.min_periods, x.ddof);
                return fmt::format("{}({}, {}, min_periods={})", function_name(x.kind), to_string(*x.arg), x.window,
                                   x.min_periods);
            },
            [](const EwmMean& x) { return fmt::format("ewm_mean({}, {})", to_string(*x.arg), x.span); },
            [](const TsZScore& x) {
                return fmt::format("ts_zscore({}, {}, min_periods={}, ddof={}, eps={})", to_string(*x.arg), x.window,
                                   x.min_periods, x.ddof, number_text(x.eps));
            },
            [](const CsRank& x) { return fmt::format("cs_rank({})", to_string(*x.arg)); },
            [](const CsZScore& x) { return fmt::format("cs_zscore({})", to_string(*x.arg)); },
            [](const FillMissing& x) {
                return fmt::format("fillna({}, {})", to_string(*x.arg), number_text(x.value));
            },
        },
        e.node);
}

ExprPtr col(std::string name) { return make(ColumnRef{std::move(name)}); }
ExprPtr constant(double v) { return make(Constant{v}); }
ExprPtr unary(UnaryOp op, ExprPtr arg) { return make(Unary{op, std::move(arg)}); }
ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) { return make(Binary{op, std::move(lhs), std::move(rhs)}); }
ExprPtr lag(ExprPtr arg, std::int64_t days) { return make(Lag{std::move(arg), days}); }
ExprPtr rolling(RollingKind kind, ExprPtr arg, std::int64_t window, std::int64_t min_periods, std::int64_t ddof) {
    return make(Rolling{kind, std::move(arg), window, min_periods, ddof});
}
ExprPtr ewm_mean(ExprPtr arg, std::int64_t span) { return make(EwmMean{std::move(arg), span}); }
ExprPtr ts_zscore(ExprPtr arg, std::int64_t window, std::int64_t min_periods, std::int64_t ddof, double eps) {
    return make(TsZScore{std::move(arg), window, min_periods, ddof, eps});
}
ExprPtr cs_rank(ExprPtr arg) { return make(CsRank{std::move(arg)}); }
ExprPtr cs_zscore(ExprPtr arg) { return make(CsZScore{std::move(arg)}); }
ExprPtr fill_missing(ExprPtr arg, double value) { return make(FillMissing{std::move(arg), value}); }

std::string_view function_name(UnaryOp op) {
    switch (op) {
    case UnaryOp::neg: return "neg";
    case UnaryOp::abs: return "abs";
    case UnaryOp::log: return "log";
    case UnaryOp::sqrt: return "sqrt";
    }
    return "?";
}

std::string_view function_name(BinaryOp op) {
    switch (op) {
    case BinaryOp::add: return "add";
    case BinaryOp::sub: return "sub";
    case BinaryOp::mul: return "mul";
    case BinaryOp::div: return "div";
    }
    return "?";
}

std::string_view function_name(RollingKind kind) {
    switch (kind) {
    case RollingKind::mean: return "rolling_mean";
    case RollingKind::std: return "rolling_std";
    case RollingKind::min: return "rolling_min";
    case RollingKind::max: return "rolling_max";
    }
    return "?";
}

std::string_view node_name(const Expr& e) {
    return std::visit(overloaded{
                          [](const ColumnRef&) -> std::string_view { return "col"; },
                          [](const Constant&) -> std::string_view { return "const"; },
                          [](const Unary& x) { return function_name(x.op); },
                          [](const Binary& x) { return function_name(x.op); },
                          [](const Lag&) -> std::string_view { return "lag"; },
                          [](const Rolling& x) { return function_name(x.kind); },
                          [](const EwmMean&) -> std::string_view { return "ewm_mean"; },
                          [](const TsZScore&) -> std::string_view { return "ts_zscore"; },
                          [](const CsRank&) -> std::string_view { return "cs_rank"; },
                          [](const CsZScore&) -> std::string_view { return "cs_zscore"; },
                          [](const FillMissing&) -> std::string_view { return "fillna"; },
                      },
                      e.node);
}

bool is_windowed(const Expr& e) {
    return std::holds_alternative<Rolling>(e.node) || std::holds_alternative<EwmMean>(e.node) ||
           std::holds_alternative<TsZScore>(e.node);
}

} // namespace xsa::fx
