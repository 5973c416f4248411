#include "xsalpha/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <utility>
#include <stdexcept>

#include <fmt/format.h>

namespace xsa {

void RiskModel::multiply(std::span<const double> w, std::span<double> out) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) out[i] = idio[i] * w[i];
    if (kind != RiskKind::sector_factor) return;
    const std::size_t k = num_sectors();
    std::vector<double> f(k, 0.0), ff(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) f[sector[i]] += w[i];
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) ff[a] += factor(a, b) * f[b];
    for (std::size_t i = 0; i < n; ++i) out[i] += ff[sector[i]];
}

double RiskModel::variance(std::span<const double> w) const {
    std::vector<double> sw(size());
    multiply(w, sw);
    double v = 0.0;
    for (std::size_t i = 0; i < size(); ++i) v += w[i] * sw[i];
    return v;
}

RiskModel build_risk_model(std::span<const double> sigma, std::span<const std::string> sectors, RiskKind kind,
                           const RiskParams& params) {
    if (sectors.size() != sigma.size()) throw std::invalid_argument("build_risk_model: sigma and sectors differ in length");
    if (!(params.sector_vol >= 0.0) || !(params.sector_corr >= -1.0 && params.sector_corr <= 1.0) ||
        !(params.idio_fraction >= 0.0 && params.idio_fraction <= 1.0))
        throw std::invalid_argument("build_risk_model: parameter out of range");

    // Names without a volatility estimate take the cross-sectional median.
    std::vector<double> known;
    for (double s : sigma)
        if (!is_missing(s) && s >= 0.0) known.push_back(s);
    double fill = 0.02;
    if (!known.empty()) {
        std::sort(known.begin(), known.end());
        const std::size_t m = known.size() / 2;
        fill = known.size() % 2 == 1 ? known[m] : 0.5 * (known[m - 1] + known[m]);
    }

    RiskModel rm;
    rm.kind = kind;
    const double share = kind == RiskKind::sector_factor ? params.idio_fraction : 1.0;
    for (double s : sigma) {
        const double v = (!is_missing(s) && s >= 0.0) ? s : fill;
        rm.idio.push_back(share * v * v);
    }
    std::map<std::string, std::size_t> index;
    for (const auto& s : sectors) index.emplace(s.empty() ? kUnclassifiedSector : s, 0);
    for (auto& [name, idx] : index) {
        idx = rm.sector_names.size();
        rm.sector_names.push_back(name);
    }
    for (const auto& s : sectors) rm.sector.push_back(index.at(s.empty() ? kUnclassifiedSector : s));
    if (kind == RiskKind::sector_factor) {
        const std::size_t k = rm.sector_names.size();
        const double var = params.sector_vol * params.sector_vol;
        rm.factor_cov.assign(k * k, params.sector_corr * var);
        for (std::size_t j = 0; j < k; ++j) rm.factor_cov[j * k + j] = var;
    }
    return rm;
}

std::string_view to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::degenerate: return "degenerate";
    }
    return "unknown";
}

std::string SolveResult::log_line() const {
    return fmt::format("status={} iterations={} objective={} gap={} long_sum_error={} short_sum_error={} "
                       "sector_error={} cap_violation={}",
                       to_string(status), iterations, format_double(objective), format_double(gap),
                       format_double(long_sum_error), format_double(short_sum_error), format_double(sector_error),
                       format_double(cap_violation));
}

double portfolio_objective(const OptProblem& problem, const RiskModel& risk, std::span<const double> w) {
    double obj = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double a = is_missing(problem.alpha[i]) ? 0.0 : problem.alpha[i];
        obj += a * w[i] - problem.lambda_tc * problem.cost[i] * std::abs(w[i] - problem.prev[i]);
    }
    if (problem.lambda_risk != 0.0) obj -= problem.lambda_risk * risk.variance(w);
    return obj;
}

namespace {

/// Root of a continuous non-decreasing function: returns x in [lo, hi] with
/// f(x) within tol of target (Illinois variant of regula falsi).
template <class F>
double solve_monotone(F&& f, double lo, double hi, double target, double tol) {
    double flo = f(lo) - target;
    if (flo >= -tol) return lo;
    double fhi = f(hi) - target;
    if (fhi <= tol) return hi;
    int side = 0;
    double x = lo;
    for (int it = 0; it < 400; ++it) {
        x = (lo * fhi - hi * flo) / (fhi - flo);
        if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        const double fx = f(x) - target;
        if (std::abs(fx) <= tol) return x;
        if (fx < 0.0) {
            lo = x;
            flo = fx;
            if (side == -1) fhi *= 0.5;
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if (side == 1) flo *= 0.5;
            side = 1;
        }
        if (hi - lo <= 1e-16 * std::max({1.0, std::abs(lo), std::abs(hi)})) break;
    }
    return x;
}

constexpr std::size_t kNoName = static_cast<std::size_t>(-1);

struct Segment {
    double slope;
    double length;
    std::size_t name = kNoName;
    std::size_t partner = kNoName;
};

/// Minimum of the sum of convex piecewise-linear pieces when exactly
/// `amount` units are allocated; segments must be sorted by slope. Names
/// of the segments drawn on are appended to `used`.
double fill_cost(const std::vector<Segment>& segs, double amount, std::vector<std::size_t>* used) {
    double cost = 0.0;
    for (const auto& s : segs) {
        if (amount <= 0.0) break;
        const double take = std::min(amount, s.length);
        cost += take * s.slope;
        amount -= take;
        if (used && take > 0.0) {
            if (s.name != kNoName) used->push_back(s.name);
            if (s.partner != kNoName) used->push_back(s.partner);
        }
    }
    return cost;
}

/// Problem restricted to the sign partition, in magnitude coordinates u >= 0.
class SplitProblem {
  public:
    SplitProblem(const OptProblem& p, const RiskModel& risk, std::vector<int> side,
                 std::vector<std::size_t> group_of, std::size_t groups)
        : p_(p), risk_(risk), side_(std::move(side)), group_of_(std::move(group_of)), groups_(groups) {
        const std::size_t n = side_.size();
        W_ = p.w_max;
        q_.resize(n);
        tc_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            q_[i] = side_[i] * p.prev[i];
            tc_[i] = p.lambda_tc * p.cost[i];
        }
        long_.resize(groups_);
        short_.resize(groups_);
        for (std::size_t i = 0; i < n; ++i) {
            if (side_[i] > 0) long_[group_of_[i]].push_back(i);
            if (side_[i] < 0) short_[group_of_[i]].push_back(i);
        }
    }

    std::size_t size() const { return side_.size(); }
    bool neutral() const { return p_.sector_neutral; }

    /// Capacity of the constraint set; feasible when >= 1.
    double capacity_long() const {
        double cap = 0.0;
        for (std::size_t g = 0; g < groups_; ++g) {
            const double l = static_cast<double>(long_[g].size()) * W_;
            const double s = static_cast<double>(short_[g].size()) * W_;
            cap += neutral() ? std::min(l, s) : l;
        }
        return cap;
    }
    double capacity_short() const {
        if (neutral()) return capacity_long();
        double cap = 0.0;
        for (std::size_t g = 0; g < groups_; ++g) cap += static_cast<double>(short_[g].size()) * W_;
        return cap;
    }

    std::vector<double> weights(const std::vector<double>& u) const {
        std::vector<double> w(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i] == 0.0 ? 0.0 : side_[i] * u[i];
        return w;
    }

    /// Smooth part: -alpha'w + lambda_risk w'Sigma w in u; gradient written to `grad`.
    double smooth(const std::vector<double>& u, std::vector<double>& grad) const {
        const std::size_t n = size();
        const auto w = weights(u);
        std::vector<double> sw(n, 0.0);
        if (p_.lambda_risk != 0.0) risk_.multiply(w, sw);
        double val = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = side_[i] * alpha(i);
            val += -a * u[i] + p_.lambda_risk * w[i] * sw[i];
            grad[i] = -a + 2.0 * p_.lambda_risk * side_[i] * sw[i];
        }
        return val;
    }

    double nonsmooth(const std::vector<double>& u) const {
        double v = 0.0;
        for (std::size_t i = 0; i < size(); ++i)
            if (side_[i] != 0) v += tc_[i] * std::abs(u[i] - q_[i]);
        return v;
    }

    double lipschitz() const {
        if (p_.lambda_risk == 0.0) return 0.0;
        // Gershgorin bound on the spectral radius of Sigma.
        std::vector<double> count(risk_.num_sectors(), 0.0);
        if (risk_.kind == RiskKind::sector_factor)
            for (std::size_t i = 0; i < size(); ++i)
                if (side_[i] != 0) count[risk_.sector[i]] += 1.0;
        double bound = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            if (side_[i] == 0) continue;
            double row = risk_.idio[i];
            if (risk_.kind == RiskKind::sector_factor)
                for (std::size_t k = 0; k < risk_.num_sectors(); ++k)
                    row += std::abs(risk_.factor(risk_.sector[i], k)) * count[k];
            bound = std::max(bound, row);
        }
        return 2.0 * p_.lambda_risk * bound;
    }

    double scale() const {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i)
            if (side_[i] != 0) m = std::max(m, std::abs(alpha(i)) + tc_[i]);
        return m;
    }

    /// Exact proximal map of t * (cost term + indicator of the feasible set) at v.
    std::vector<double> prox(const std::vector<double>& v, double t) const {
        const std::size_t n = size();
        std::vector<double> u(n, 0.0);
        double vmax = 0.0, qmax = 0.0, tcmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (side_[i] == 0) continue;
            vmax = std::max(vmax, std::abs(v[i]));
            qmax = std::max(qmax, std::abs(q_[i]));
            tcmax = std::max(tcmax, t * tc_[i]);
        }
        const double reach = vmax + qmax + tcmax + W_ + 1.0;
        auto resp = [&](std::size_t i, double x) {
            const double z = v[i] + x;
            const double th = t * tc_[i];
            double r = q_[i];
            if (z > q_[i] + th) r = z - th;
            else if (z < q_[i] - th) r = z + th;
            return std::clamp(r, 0.0, W_);
        };
        auto group_sum = [&](const std::vector<std::size_t>& idx, double x) {
            double s = 0.0;
            for (auto i : idx) s += resp(i, x);
            return s;
        };
        constexpr double tol = 1e-14;

        if (!neutral()) {
            std::vector<std::size_t> longs, shorts;
            for (std::size_t g = 0; g < groups_; ++g) {
                longs.insert(longs.end(), long_[g].begin(), long_[g].end());
                shorts.insert(shorts.end(), short_[g].begin(), short_[g].end());
            }
            for (const auto* idx : {&longs, &shorts}) {
                const double x = solve_monotone([&](double y) { return group_sum(*idx, y); }, -reach, reach, 1.0, tol);
                for (auto i : *idx) u[i] = resp(i, x);
            }
            return u;
        }

        // Sector-neutral: long shift theta + nu_j, short shift -nu_j.
        std::vector<double> nu(groups_, 0.0);
        auto inner = [&](std::size_t g, double theta) {
            const auto& L = long_[g];
            const auto& S = short_[g];
            return solve_monotone([&](double y) { return group_sum(L, theta + y) - group_sum(S, -y); },
                                  -(std::abs(theta) + 2.0 * reach), std::abs(theta) + 2.0 * reach, 0.0, tol);
        };
        auto total = [&](double theta) {
            double s = 0.0;
            for (std::size_t g = 0; g < groups_; ++g) {
                if (long_[g].empty() || short_[g].empty()) continue;
                nu[g] = inner(g, theta);
                s += group_sum(long_[g], theta + nu[g]);
            }
            return s;
        };
        const double theta = solve_monotone(total, -2.0 * reach, 2.0 * reach, 1.0, tol);
        total(theta);
        for (std::size_t g = 0; g < groups_; ++g) {
            if (long_[g].empty() || short_[g].empty()) continue;
            for (auto i : long_[g]) u[i] = resp(i, theta + nu[g]);
            for (auto i : short_[g]) u[i] = resp(i, -nu[g]);
        }
        return u;
    }

    /// Minimum over the feasible set of grad'y + cost(y). Names carrying
    /// weight in the minimizer are appended to `used`.
    double linear_min(const std::vector<double>& grad, std::vector<std::size_t>* used = nullptr) const {
        double base = 0.0;
        auto segments = [&](const std::vector<std::size_t>& idx) {
            std::vector<Segment> segs;
            for (auto i : idx) {
                base += tc_[i] * std::abs(q_[i]);
                const double g = grad[i];
                if (q_[i] <= 0.0) {
                    segs.push_back({g + tc_[i], W_, i});
                } else if (q_[i] >= W_) {
                    segs.push_back({g - tc_[i], W_, i});
                } else {
                    segs.push_back({g - tc_[i], q_[i], i});
                    segs.push_back({g + tc_[i], W_ - q_[i], i});
                }
            }
            std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.slope < b.slope; });
            return segs;
        };
        if (!neutral()) {
            std::vector<std::size_t> longs, shorts;
            for (std::size_t g = 0; g < groups_; ++g) {
                longs.insert(longs.end(), long_[g].begin(), long_[g].end());
                shorts.insert(shorts.end(), short_[g].begin(), short_[g].end());
            }
            const auto ls = segments(longs);
            const auto ss = segments(shorts);
            return base + fill_cost(ls, 1.0, used) + fill_cost(ss, 1.0, used);
        }
        // Each sector moves the same amount on both sides: merge the two
        // sorted segment lists into segments of the combined cost.
        std::vector<Segment> combined;
        for (std::size_t g = 0; g < groups_; ++g) {
            auto ls = segments(long_[g]);
            auto ss = segments(short_[g]);
            if (ls.empty() || ss.empty()) continue;
            std::size_t a = 0, b = 0;
            double ra = ls[0].length, rb = ss[0].length;
            while (a < ls.size() && b < ss.size()) {
                const double len = std::min(ra, rb);
                if (len > 0.0) combined.push_back({ls[a].slope + ss[b].slope, len, ls[a].name, ss[b].name});
                ra -= len;
                rb -= len;
                if (ra <= 0.0 && ++a < ls.size()) ra = ls[a].length;
                if (rb <= 0.0 && ++b < ss.size()) rb = ss[b].length;
            }
        }
        std::sort(combined.begin(), combined.end(), [](const Segment& a, const Segment& b) { return a.slope < b.slope; });
        return base + fill_cost(combined, 1.0, used);
    }

    double linear_value(const std::vector<double>& grad, const std::vector<double>& u) const {
        double v = 0.0;
        for (std::size_t i = 0; i < size(); ++i)
            if (side_[i] != 0) v += grad[i] * u[i] + tc_[i] * std::abs(u[i] - q_[i]);
        return v;
    }

  private:
    double alpha(std::size_t i) const { return is_missing(p_.alpha[i]) ? 0.0 : p_.alpha[i]; }

    const OptProblem& p_;
    const RiskModel& risk_;
    std::vector<int> side_;
    std::vector<std::size_t> group_of_;
    std::size_t groups_;
    double W_ = 1.0;
    std::vector<double> q_;
    std::vector<double> tc_;
    std::vector<std::vector<std::size_t>> long_;
    std::vector<std::vector<std::size_t>> short_;
};

struct PartitionResult {
    std::vector<int> side;
    std::vector<double> weights;
    double objective = 0.0;
    double gap = 0.0;
    int iterations = 0;
    SolveStatus status = SolveStatus::max_iterations;
};

constexpr int kMaxRefinements = 20;

bool partition_feasible(const SplitProblem& sp) {
    return sp.capacity_long() >= 1.0 - 1e-12 && sp.capacity_short() >= 1.0 - 1e-12;
}

/// Accelerated proximal gradient inside one sign partition, certified by
/// the Frank-Wolfe gap.
PartitionResult solve_partition(const SplitProblem& sp, const std::vector<int>& side, const OptProblem& problem,
                                const RiskModel& risk, const SolverOptions& options) {
    const std::size_t n = sp.size();
    const double L = sp.lipschitz();
    const double floor = sp.scale() / (10.0 * problem.w_max);
    const double step = 1.0 / std::max({L, floor, 1e-12});

    std::vector<double> grad(n, 0.0);
    std::vector<double> start(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) start[i] = side[i] * problem.prev[i];
    std::vector<double> u = sp.prox(start, step);
    std::vector<double> y = u;
    double t_mom = 1.0;
    double f_u = sp.smooth(u, grad) + sp.nonsmooth(u);

    auto gap_at = [&](const std::vector<double>& x) {
        std::vector<double> g(n, 0.0);
        sp.smooth(x, g);
        return std::max(sp.linear_value(g, x) - sp.linear_min(g), 0.0);
    };
    auto converged = [&](double gap) { return gap <= options.rel_tol * (1.0 + std::abs(f_u)); };

    PartitionResult res;
    res.side = side;
    int it = 0;
    double gap = 0.0;
    for (; it < options.max_iters; ++it) {
        sp.smooth(y, grad);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = y[i] - step * grad[i];
        std::vector<double> u_next = sp.prox(v, step);
        std::vector<double> g_tmp(n);
        const double f_next = sp.smooth(u_next, g_tmp) + sp.nonsmooth(u_next);

        if (f_next > f_u) {
            // Restart momentum from the current iterate.
            t_mom = 1.0;
            y = u;
            gap = gap_at(u);
            if (converged(gap)) {
                res.status = SolveStatus::optimal;
                ++it;
                break;
            }
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
        const double beta = (t_mom - 1.0) / t_next;
        for (std::size_t i = 0; i < n; ++i) y[i] = u_next[i] + beta * (u_next[i] - u[i]);
        t_mom = t_next;
        u = std::move(u_next);
        f_u = f_next;

        gap = gap_at(u);
        if (converged(gap)) {
            res.status = SolveStatus::optimal;
            ++it;
            break;
        }
    }
    if (res.status == SolveStatus::max_iterations) {
        gap = gap_at(u);
        if (converged(gap)) res.status = SolveStatus::optimal;
    }
    res.iterations = it;
    res.gap = gap;
    res.weights = sp.weights(u);
    res.objective = portfolio_objective(problem, risk, res.weights);
    return res;
}

/// Sign flips suggested by the split relaxation, where every name may be
/// held on either side: names drawn on by its linear minimizer at `w` on a
/// side other than their own. Held names keep their side.
std::vector<std::pair<std::size_t, int>> flip_candidates(const OptProblem& problem, const RiskModel& risk,
                                                         const std::vector<int>& side, const std::vector<double>& w,
                                                         const std::vector<std::size_t>& group_of, std::size_t groups) {
    const std::size_t n = w.size();
    std::vector<double> sw(n, 0.0);
    if (problem.lambda_risk != 0.0) risk.multiply(w, sw);
    OptProblem twin;
    twin.lambda_tc = problem.lambda_tc;
    twin.w_max = problem.w_max;
    twin.sector_neutral = problem.sector_neutral;
    twin.alpha.resize(2 * n);
    twin.cost.resize(2 * n);
    twin.prev.resize(2 * n);
    std::vector<int> twin_side(2 * n, 0);
    std::vector<std::size_t> twin_group(2 * n);
    std::vector<double> grad(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = is_missing(problem.alpha[i]) ? 0.0 : problem.alpha[i];
        const double g = -a + 2.0 * problem.lambda_risk * sw[i];
        const bool free = w[i] == 0.0;
        for (std::size_t k : {i, n + i}) {
            twin.alpha[k] = a;
            twin.cost[k] = problem.cost[i];
            twin.prev[k] = problem.prev[i];
            twin_group[k] = group_of[i];
        }
        twin_side[i] = free || side[i] > 0 ? 1 : 0;
        twin_side[n + i] = free || side[i] < 0 ? -1 : 0;
        grad[i] = g;
        grad[n + i] = -g;
    }
    SplitProblem relax(twin, risk, twin_side, twin_group, groups);
    std::vector<std::size_t> used;
    relax.linear_min(grad, &used);
    std::vector<std::pair<std::size_t, int>> out;
    for (auto k : used) {
        const std::size_t i = k % n;
        const int s = k < n ? 1 : -1;
        if (side[i] != s && std::find(out.begin(), out.end(), std::pair{i, s}) == out.end()) out.emplace_back(i, s);
    }
    return out;
}

void fill_residuals(SolveResult& r, const std::vector<double>& w, const std::vector<std::size_t>& group_of,
                    std::size_t groups, bool neutral, double w_max) {
    double pos = 0.0, neg = 0.0, maxabs = 0.0;
    std::vector<double> net(groups, 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] > 0.0) pos += w[i];
        if (w[i] < 0.0) neg -= w[i];
        maxabs = std::max(maxabs, std::abs(w[i]));
        net[group_of[i]] += w[i];
    }
    r.long_sum_error = std::abs(pos - 1.0);
    r.short_sum_error = std::abs(neg - 1.0);
    r.cap_violation = std::max(0.0, maxabs - w_max);
    r.sector_error = 0.0;
    if (neutral)
        for (double v : net) r.sector_error = std::max(r.sector_error, std::abs(v));
}

} // namespace

SolveResult solve_portfolio(const OptProblem& problem, const RiskModel& risk, const SolverOptions& options) {
    const std::size_t n = problem.alpha.size();
    if (problem.cost.size() != n || problem.prev.size() != n || risk.size() != n)
        throw std::invalid_argument("solve_portfolio: problem and risk model dimensions differ");
    if (!(problem.lambda_tc >= 0.0) || !(problem.lambda_risk >= 0.0))
        throw std::invalid_argument("solve_portfolio: penalties must be non-negative");
    if (!(problem.w_max > 0.0 && problem.w_max <= 1.0)) throw std::invalid_argument("solve_portfolio: w_max must be in (0, 1]");
    if (!problem.sectors.empty() && problem.sectors.size() != n)
        throw std::invalid_argument("solve_portfolio: sector labels and alpha differ in length");

    // Constraint groups: sectors when neutral, a single group otherwise.
    std::vector<std::size_t> group_of(n, 0);
    std::size_t groups = 1;
    {
        std::map<std::string, std::size_t> index;
        auto label = [&](std::size_t i) -> std::string {
            if (!problem.sectors.empty()) return problem.sectors[i].empty() ? kUnclassifiedSector : problem.sectors[i];
            return risk.sector_names.empty() ? std::string(kUnclassifiedSector) : risk.sector_names[risk.sector[i]];
        };
        for (std::size_t i = 0; i < n; ++i) index.emplace(label(i), 0);
        std::size_t k = 0;
        for (auto& [name, idx] : index) idx = k++;
        for (std::size_t i = 0; i < n; ++i) group_of[i] = index.at(label(i));
        groups = std::max<std::size_t>(k, 1);
    }
    std::vector<std::size_t> constraint_group = problem.sector_neutral ? group_of : std::vector<std::size_t>(n, 0);
    const std::size_t constraint_groups = problem.sector_neutral ? groups : 1;

    SolveResult res;
    std::vector<int> side(n, 0);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = problem.alpha[i];
        if (is_missing(a) || a == 0.0) continue;
        side[i] = a > 0.0 ? 1 : -1;
        any = true;
    }
    if (!any) {
        res.status = SolveStatus::degenerate;
        res.weights = problem.prev;
        res.objective = portfolio_objective(problem, risk, res.weights);
        res.message = "all alphas are zero; previous weights kept";
        fill_residuals(res, res.weights, constraint_group, constraint_groups, problem.sector_neutral, problem.w_max);
        return res;
    }

    {
        SplitProblem sp(problem, risk, side, constraint_group, constraint_groups);
        const double cap_l = sp.capacity_long();
        const double cap_s = sp.capacity_short();
        if (!partition_feasible(sp)) {
            res.status = SolveStatus::infeasible;
            res.weights.assign(n, 0.0);
            res.message = problem.sector_neutral
                              ? fmt::format("infeasible: sector-matched capacity {} is below 1 at w_max {}",
                                            format_double(std::min(cap_l, cap_s)), format_double(problem.w_max))
                              : fmt::format("infeasible: long capacity {} and short capacity {} at w_max {}",
                                            format_double(cap_l), format_double(cap_s), format_double(problem.w_max));
            return res;
        }
    }

    auto attempt = [&](const std::vector<int>& s) -> std::optional<PartitionResult> {
        SplitProblem sp(problem, risk, s, constraint_group, constraint_groups);
        if (!partition_feasible(sp)) return std::nullopt;
        return solve_partition(sp, s, problem, risk, options);
    };
    PartitionResult best = *attempt(side);
    auto better = [&](const PartitionResult& r) {
        return r.objective > best.objective + 1e-12 * (1.0 + std::abs(best.objective));
    };

    // A position whose alpha changed sign can be cheaper to keep than to close.
    std::vector<int> held = side;
    for (std::size_t i = 0; i < n; ++i) {
        if (problem.prev[i] > 0.0) held[i] = 1;
        if (problem.prev[i] < 0.0) held[i] = -1;
    }
    if (held != side)
        if (auto r = attempt(held); r && better(*r)) best = std::move(*r);

    for (int round = 0; round < kMaxRefinements; ++round) {
        std::optional<PartitionResult> next;
        for (const auto& [i, s] : flip_candidates(problem, risk, best.side, best.weights, constraint_group, constraint_groups)) {
            auto trial = best.side;
            trial[i] = s;
            auto r = attempt(trial);
            if (r && better(*r) && (!next || r->objective > next->objective)) next = std::move(r);
        }
        if (!next) break;
        best = std::move(*next);
    }

    res.status = best.status;
    res.iterations = best.iterations;
    res.weights = std::move(best.weights);
    res.objective = best.objective;
    res.gap = best.gap;
    if (res.status == SolveStatus::max_iterations) res.message = "iteration limit reached; returning best iterate";
    std::size_t against = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (res.weights[i] != 0.0 && best.side[i] != side[i]) ++against;
    if (against > 0) {
        if (!res.message.empty()) res.message += "; ";
        res.message += fmt::format("{} names held against their alpha sign", against);
    }
    fill_residuals(res, res.weights, constraint_group, constraint_groups, problem.sector_neutral, problem.w_max);
    return res;
}

ConcentrationMetrics concentration_metrics(std::span<const double> weights, std::span<const std::string> sectors) {
    ConcentrationMetrics m;
    if (weights.empty()) return m;
    double hhi = 0.0, maxabs = 0.0;
    std::map<std::string, double> net;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        hhi += weights[i] * weights[i];
        maxabs = std::max(maxabs, std::abs(weights[i]));
        if (!sectors.empty()) net[sectors[i].empty() ? kUnclassifiedSector : sectors[i]] += weights[i];
    }
    m.effective_n = hhi > 0.0 ? 1.0 / hhi : kMissing;
    m.max_position = maxabs;
    m.sector_tilts = 0.0;
    for (const auto& [name, v] : net) m.sector_tilts += std::abs(v);
    return m;
}

std::vector<double> naive_weights(std::span<const double> alpha) {
    auto w = long_short_weights(alpha);
    if (!w) throw std::invalid_argument("naive_weights: alpha needs both a positive and a negative entry");
    return std::move(*w);
}

} // namespace xsa
