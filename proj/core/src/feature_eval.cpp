#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "xsalpha/feature_dsl.hpp"
#include "xsalpha/parallel.hpp"

namespace xsa::fx {

namespace {

using Column = std::vector<double>;

double apply_unary(UnaryOp op, double x) {
    if (is_missing(x)) return kMissing;
    switch (op) {
    case UnaryOp::neg: return -x;
    case UnaryOp::abs: return std::abs(x);
    case UnaryOp::log: return x > 0.0 ? std::log(x) : kMissing;
    case UnaryOp::sqrt: return x >= 0.0 ? std::sqrt(x) : kMissing;
    }
    return kMissing;
}

double apply_binary(BinaryOp op, double a, double b) {
    if (is_missing(a) || is_missing(b)) return kMissing;
    switch (op) {
    case BinaryOp::add: return a + b;
    case BinaryOp::sub: return a - b;
    case BinaryOp::mul: return a * b;
    case BinaryOp::div: return b == 0.0 ? kMissing : a / b;
    }
    return kMissing;
}

struct WindowStats {
    std::size_t count = 0;
    double mean = 0.0;
    double ss = 0.0; // sum of squared deviations from mean
    double min = 0.0;
    double max = 0.0;
};

WindowStats window_stats(const Column& x, std::size_t lo, std::size_t hi) {
    WindowStats w;
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) {
        if (is_missing(x[k])) continue;
        if (w.count == 0) {
            w.min = w.max = x[k];
        } else {
            w.min = std::min(w.min, x[k]);
            w.max = std::max(w.max, x[k]);
        }
        sum += x[k];
        ++w.count;
    }
    if (w.count == 0) return w;
    w.mean = sum / static_cast<double>(w.count);
    for (std::size_t k = lo; k <= hi; ++k)
        if (!is_missing(x[k])) w.ss += (x[k] - w.mean) * (x[k] - w.mean);
    return w;
}

double window_std(const WindowStats& w, std::int64_t ddof) {
    const auto dof = static_cast<std::int64_t>(w.count) - ddof;
    if (dof <= 0) return kMissing;
    return std::sqrt(w.ss / static_cast<double>(dof));
}

class Evaluator {
  public:
    explicit Evaluator(const Panel& p) : panel_(p) {}

    Column eval(const Expr& e) {
        return std::visit([&](const auto& n) { return eval_node(n); }, e.node);
    }

  private:
    template <class F>
    void per_security(F&& f) {
        parallel_for(panel_.num_securities(), [&](std::size_t s) { f(panel_.security_rows(s)); });
    }

    template <class F>
    void per_date(F&& f) {
        parallel_for(panel_.num_dates(), [&](std::size_t d) { f(panel_.rows_on(d)); });
    }

    Column eval_node(const ColumnRef& n) {
        const auto c = panel_.column(n.name);
        return Column(c.begin(), c.end());
    }

    Column eval_node(const Constant& n) { return Column(panel_.rows(), n.value); }

    Column eval_node(const Unary& n) {
        Column x = eval(*n.arg);
        for (auto& v : x) v = apply_unary(n.op, v);
        return x;
    }

    Column eval_node(const Binary& n) {
        Column a = eval(*n.lhs);
        const Column b = eval(*n.rhs);
        for (std::size_t r = 0; r < a.size(); ++r) a[r] = apply_binary(n.op, a[r], b[r]);
        return a;
    }

    Column eval_node(const Lag& n) {
        const Column x = eval(*n.arg);
        Column out(x.size(), kMissing);
        const auto k = static_cast<std::size_t>(n.days);
        per_security([&](RowRange rr) {
            for (std::size_t r = rr.begin + k; r < rr.end; ++r) out[r] = x[r - k];
        });
        return out;
    }

    Column eval_node(const Rolling& n) {
        const Column x = eval(*n.arg);
        Column out(x.size(), kMissing);
        const auto w = static_cast<std::size_t>(n.window);
        const auto min_periods = static_cast<std::size_t>(n.min_periods);
        per_security([&](RowRange rr) {
            for (std::size_t t = rr.begin; t < rr.end; ++t) {
                const std::size_t lo = t + 1 >= rr.begin + w ? t + 1 - w : rr.begin;
                const WindowStats ws = window_stats(x, lo, t);
                if (ws.count < min_periods || ws.count == 0) continue;
                switch (n.kind) {
                case RollingKind::mean: out[t] = ws.mean; break;
                case RollingKind::std: out[t] = window_std(ws, n.ddof); break;
                case RollingKind::min: out[t] = ws.min; break;
                case RollingKind::max: out[t] = ws.max; break;
                }
            }
        });
        return out;
    }

    Column eval_node(const EwmMean& n) {
        const Column x = eval(*n.arg);
        Column out(x.size(), kMissing);
        const double alpha = 2.0 / (static_cast<double>(n.span) + 1.0);
        per_security([&](RowRange rr) {
            double state = kMissing;
            for (std::size_t t = rr.begin; t < rr.end; ++t) {
                if (!is_missing(x[t])) state = is_missing(state) ? x[t] : alpha * x[t] + (1.0 - alpha) * state;
                out[t] = state;
            }
        });
        return out;
    }

    Column eval_node(const TsZScore& n) {
        const Column x = eval(*n.arg);
        Column out(x.size(), kMissing);
        const auto w = static_cast<std::size_t>(n.window);
        const auto min_periods = static_cast<std::size_t>(n.min_periods);
        per_security([&](RowRange rr) {
            for (std::size_t t = rr.begin; t < rr.end; ++t) {
                if (is_missing(x[t])) continue;
                const std::size_t lo = t + 1 >= rr.begin + w ? t + 1 - w : rr.begin;
                const WindowStats ws = window_stats(x, lo, t);
                if (ws.count < min_periods) continue;
                const double sd = window_std(ws, n.ddof);
                if (is_missing(sd)) continue;
                out[t] = apply_binary(BinaryOp::div, x[t] - ws.mean, sd + n.eps);
            }
        });
        return out;
    }

    Column eval_node(const CsRank& n) {
        const Column x = eval(*n.arg);
        Column out(x.size(), kMissing);
        per_date([&](std::span<const std::size_t> rows) {
            std::vector<std::size_t> present;
            for (auto r : rows)
                if (!is_missing(x[r])) present.push_back(r);
            std::sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
                return x[a] < x[b] || (x[a] == x[b] && a < b);
            });
            const auto count = static_cast<double>(present.size());
            for (std::size_t i = 0; i < present.size();) {
                std::size_t j = i;
                while (j + 1 < present.size() && x[present[j + 1]] == x[present[i]]) ++j;
                // Ranks i+1 .. j+1 share their average.
                const double avg_rank = 0.5 * static_cast<double>(i + j + 2);
                for (std::size_t k = i; k <= j; ++k) out[present[k]] = avg_rank / count;
                i = j + 1;
            }
        });
        return out;
    }

    Column eval_node(const CsZScore& n) {
        const Column x = eval(*n.arg);
        Column out(x.size(), kMissing);
        per_date([&](std::span<const std::size_t> rows) {
            double sum = 0.0;
            std::size_t count = 0;
            for (auto r : rows)
                if (!is_missing(x[r])) {
                    sum += x[r];
                    ++count;
                }
            if (count == 0) return;
            const double mean = sum / static_cast<double>(count);
            double ss = 0.0;
            for (auto r : rows)
                if (!is_missing(x[r])) ss += (x[r] - mean) * (x[r] - mean);
            const double sd = std::sqrt(ss / static_cast<double>(count));
            for (auto r : rows) out[r] = apply_binary(BinaryOp::div, x[r] - mean, sd);
        });
        return out;
    }

    Column eval_node(const FillMissing& n) {
        Column x = eval(*n.arg);
        for (auto& v : x)
            if (is_missing(v)) v = n.value;
        return x;
    }

    const Panel& panel_;
};

} // namespace

std::vector<double> evaluate(const Expr& expr, const Panel& panel) {
    const auto report = check_point_in_time(expr);
    if (!report.passed()) {
        const auto& v = report.violations.front();
        throw std::invalid_argument(fmt::format("feature fails point-in-time check at {}: {}", v.path, v.message));
    }
    return Evaluator(panel).eval(expr);
}

} // namespace xsa::fx
