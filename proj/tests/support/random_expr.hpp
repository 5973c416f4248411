#pragma once

#include <random>
#include <string>
#include <vector>

#include "xsalpha/feature_expr.hpp"

namespace oracle {

/// Random well-formed expression over `columns`; every generated node
/// passes the point-in-time check.
class ExprGen {
  public:
    ExprGen(std::uint64_t seed, std::vector<std::string> columns) : rng_(seed), columns_(std::move(columns)) {}

    xsa::fx::ExprPtr operator()(int depth = 4) { return gen(depth); }

  private:
    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    xsa::fx::ExprPtr leaf() {
        using namespace xsa::fx;
        if (pick(0, 5) == 0) return constant(static_cast<double>(pick(-3, 3)) * 0.5);
        return col(columns_[static_cast<std::size_t>(pick(0, static_cast<int>(columns_.size()) - 1))]);
    }

    xsa::fx::ExprPtr gen(int depth) {
        using namespace xsa::fx;
        if (depth <= 0 || pick(0, 6) == 0) return leaf();
        const int d = depth - 1;
        switch (pick(0, 11)) {
        case 0:
            return unary(static_cast<UnaryOp>(pick(0, 3)), gen(d));
        case 1:
        case 2:
            return binary(static_cast<BinaryOp>(pick(0, 3)), gen(d), gen(d));
        case 3:
            return lag(gen(d), pick(0, 4));
        case 4:
        case 5: {
            const int w = pick(1, 12);
            const auto kind = static_cast<RollingKind>(pick(0, 3));
            return rolling(kind, gen(d), w, pick(1, w), kind == RollingKind::std ? pick(0, 1) : 0);
        }
        case 6:
            return ewm_mean(gen(d), pick(1, 10));
        case 7: {
            const int w = pick(2, 12);
            return ts_zscore(gen(d), w, pick(1, w), pick(0, 1), 1e-8);
        }
        case 8:
        case 9:
            return cs_rank(gen(d));
        case 10:
            return cs_zscore(gen(d));
        default:
            return fill_missing(gen(d), static_cast<double>(pick(-1, 1)));
        }
    }

    std::mt19937_64 rng_;
    std::vector<std::string> columns_;
};

} // namespace oracle
