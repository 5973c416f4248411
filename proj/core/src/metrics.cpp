#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "xsalpha/analytics.hpp"
#include "xsalpha/errors.hpp"
#include "xsalpha/parallel.hpp"

namespace xsa {

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0; // population
};

Moments moments(std::span<const double> x) {
    Moments m;
    for (double v : x) m.mean += v;
    m.mean /= static_cast<double>(x.size());
    for (double v : x) m.var += (v - m.mean) * (v - m.mean);
    m.var /= static_cast<double>(x.size());
    return m;
}

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> rank(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    return rank;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const Moments ma = moments(a);
    const Moments mb = moments(b);
    if (!(ma.var > 0.0) || !(mb.var > 0.0)) return kMissing;
    double cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - ma.mean) * (b[i] - mb.mean);
    cov /= static_cast<double>(a.size());
    return cov / std::sqrt(ma.var * mb.var);
}

} // namespace

double sharpe(std::span<const double> returns) {
    if (returns.size() < 2) throw NumericError("sharpe: fewer than two observations");
    const Moments m = moments(returns);
    if (!(m.var > 0.0)) throw NumericError("sharpe: zero variance");
    return std::sqrt(kTradingDays) * m.mean / std::sqrt(m.var);
}

double sharpe(const ReturnSeries& returns) { return sharpe(returns.values); }

double sharpe_or_missing(std::span<const double> returns) {
    if (returns.size() < 2) return kMissing;
    const Moments m = moments(returns);
    if (!(m.var > 0.0)) return kMissing;
    return std::sqrt(kTradingDays) * m.mean / std::sqrt(m.var);
}

double spearman(std::span<const double> a, std::span<const double> b) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!is_missing(a[i]) && !is_missing(b[i])) {
            x.push_back(a[i]);
            y.push_back(b[i]);
        }
    if (x.size() < 3) return kMissing;
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

ICSeries spearman_ic(const ScorePanel& scores, const Panel& panel, std::string_view target_column) {
    const Panel& keys = scores.keys();
    const auto s = scores.values();
    const auto target = panel.column(target_column);
    const auto sec = keys.row_security();
    std::vector<std::optional<std::size_t>> to_panel;
    for (const auto& id : keys.securities()) to_panel.push_back(panel.find_security(id));

    std::vector<double> per_date(keys.num_dates(), kMissing);
    parallel_for(keys.num_dates(), [&](std::size_t d) {
        const Date date = keys.calendar()[d];
        std::vector<double> a, b;
        for (auto r : keys.rows_on(d)) {
            const auto& ps = to_panel[sec[r]];
            if (!ps) continue;
            const auto row = panel.find_row(*ps, date);
            if (!row) continue;
            a.push_back(s[r]);
            b.push_back(target[*row]);
        }
        per_date[d] = spearman(a, b);
    });

    ICSeries out;
    double sum = 0.0;
    for (std::size_t d = 0; d < per_date.size(); ++d) {
        if (is_missing(per_date[d])) continue;
        out.dates.push_back(keys.calendar()[d]);
        out.values.push_back(per_date[d]);
        sum += per_date[d];
    }
    if (!out.values.empty()) out.mean = sum / static_cast<double>(out.values.size());
    return out;
}

double hit_rate(std::span<const double> returns) {
    if (returns.empty()) return kMissing;
    const auto hits = std::count_if(returns.begin(), returns.end(), [](double r) { return r > 0.0; });
    return static_cast<double>(hits) / static_cast<double>(returns.size());
}

double max_drawdown(std::span<const double> returns) {
    double equity = 1.0, peak = 1.0, worst = 0.0;
    for (double r : returns) {
        equity *= 1.0 + r;
        peak = std::max(peak, equity);
        worst = std::min(worst, equity / peak - 1.0);
    }
    return worst;
}

double calmar(std::span<const double> returns) {
    if (returns.empty()) return kMissing;
    const double dd = max_drawdown(returns);
    if (dd == 0.0) return kMissing;
    return kTradingDays * moments(returns).mean / std::abs(dd);
}

PerfReport perf_report(std::string name, const ReturnSeries& returns, const ICSeries* ic, const PerfOptions& options) {
    PerfReport rep;
    rep.name = std::move(name);
    rep.days = returns.size();
    if (ic) rep.mean_ic = ic->mean;
    if (returns.empty()) return rep;
    const auto& r = returns.values;
    const Moments m = moments(r);
    rep.mean_daily = m.mean;
    rep.annual_return = m.mean * kTradingDays;
    rep.annual_vol = std::sqrt(m.var * kTradingDays);
    rep.sharpe = sharpe_or_missing(r);
    rep.max_drawdown = max_drawdown(r);
    rep.calmar = calmar(r);
    rep.hit_rate = hit_rate(r);
    if (options.compound_total) {
        double eq = 1.0;
        for (double v : r) eq *= 1.0 + v;
        rep.total_return = eq - 1.0;
    } else {
        rep.total_return = std::accumulate(r.begin(), r.end(), 0.0);
    }

    std::map<int, std::vector<double>> by_year;
    for (std::size_t i = 0; i < r.size(); ++i) by_year[returns.dates[i].year()].push_back(r[i]);
    std::vector<double> year_sharpes;
    for (const auto& [year, vals] : by_year) {
        YearRow row;
        row.year = year;
        row.days = vals.size();
        row.sharpe = sharpe_or_missing(vals);
        double eq = 1.0;
        for (double v : vals) eq *= 1.0 + v;
        row.total_return = eq - 1.0;
        if (!is_missing(row.sharpe)) year_sharpes.push_back(row.sharpe);
        rep.years.push_back(row);
    }
    if (!year_sharpes.empty()) {
        const Moments ym = moments(year_sharpes);
        rep.avg_year_sharpe = ym.mean;
        rep.best_year_sharpe = *std::max_element(year_sharpes.begin(), year_sharpes.end());
        rep.worst_year_sharpe = *std::min_element(year_sharpes.begin(), year_sharpes.end());
        if (year_sharpes.size() >= 2)
            rep.year_sharpe_std = std::sqrt(ym.var * static_cast<double>(year_sharpes.size()) /
                                            static_cast<double>(year_sharpes.size() - 1));
    }
    return rep;
}

std::vector<std::vector<double>> strategy_correlations(std::span<const ReturnSeries> series, std::size_t min_overlap) {
    const std::size_t k = series.size();
    std::vector<std::vector<double>> c(k, std::vector<double>(k, kMissing));
    for (std::size_t i = 0; i < k; ++i) {
        c[i][i] = 1.0;
        for (std::size_t j = 0; j < i; ++j) {
            const AlignedPair p = align_on_dates(series[i], series[j]);
            if (p.dates.size() >= min_overlap) c[i][j] = c[j][i] = pearson(p.a, p.b);
        }
    }
    return c;
}

} // namespace xsa
