#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>

namespace xsa::fx {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class UnaryOp { neg, abs, log, sqrt };
enum class BinaryOp { add, sub, mul, div };
enum class RollingKind { mean, std, min, max };

struct ColumnRef {
    std::string name;
};
struct Constant {
    double value = 0.0;
};
struct Unary {
    UnaryOp op;
    ExprPtr arg;
};
struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};
/// Value `days` rows earlier on the security's own calendar.
struct Lag {
    ExprPtr arg;
    std::int64_t days = 0;
};
/// Trailing window over the security's last `window` rows (current included).
/// `ddof` only applies to RollingKind::std (0 = population, 1 = sample).
struct Rolling {
    RollingKind kind;
    ExprPtr arg;
    std::int64_t window = 1;
    std::int64_t min_periods = 1;
    std::int64_t ddof = 0;
};
/// Recursive EWM with smoothing 2 / (span + 1), seeded at the first observation.
struct EwmMean {
    ExprPtr arg;
    std::int64_t span = 1;
};
/// Per-security rolling z-score: (x - mean_w) / (std_w + eps).
struct TsZScore {
    ExprPtr arg;
    std::int64_t window = 1;
    std::int64_t min_periods = 1;
    std::int64_t ddof = 1;
    double eps = 1e-8;
};
/// Per-date percentile rank in (0, 1], average rank for ties.
struct CsRank {
    ExprPtr arg;
};
/// Per-date z-score with population standard deviation.
struct CsZScore {
    ExprPtr arg;
};
struct FillMissing {
    ExprPtr arg;
    double value = 0.0;
};

using Node = std::variant<ColumnRef, Constant, Unary, Binary, Lag, Rolling, EwmMean, TsZScore, CsRank, CsZScore,
                          FillMissing>;

struct Expr {
    Node node;
};

/// Structural equality (constants compared bitwise).
bool operator==(const Expr& a, const Expr& b);

/// Canonical text form; parse(to_string(e)) is structurally equal to e.
std::string to_string(const Expr& e);

// Builders.
ExprPtr col(std::string name);
ExprPtr constant(double v);
ExprPtr unary(UnaryOp op, ExprPtr arg);
ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr lag(ExprPtr arg, std::int64_t days);
ExprPtr rolling(RollingKind kind, ExprPtr arg, std::int64_t window, std::int64_t min_periods, std::int64_t ddof = 0);
ExprPtr ewm_mean(ExprPtr arg, std::int64_t span);
ExprPtr ts_zscore(ExprPtr arg, std::int64_t window, std::int64_t min_periods, std::int64_t ddof = 1,
                  double eps = 1e-8);
ExprPtr cs_rank(ExprPtr arg);
ExprPtr cs_zscore(ExprPtr arg);
ExprPtr fill_missing(ExprPtr arg, double value);

std::string_view function_name(UnaryOp op);
std::string_view function_name(BinaryOp op);
std::string_view function_name(RollingKind kind);
std::string_view node_name(const Expr& e);

/// Windowed per-security node (Rolling, EwmMean, TsZScore).
bool is_windowed(const Expr& e);

/// Child expressions in evaluation order.
template <class F>
void for_each_child(const Expr& e, F&& f) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Binary>) {
                f(*n.lhs);
                f(*n.rhs);
            } else if constexpr (!std::is_same_v<T, ColumnRef> && !std::is_same_v<T, Constant>) {
                f(*n.arg);
            }
        },
        e.node);
}

} // namespace xsa::fx
