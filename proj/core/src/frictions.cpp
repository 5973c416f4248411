#include "xsalpha/frictions.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "xsalpha/parallel.hpp"

namespace xsa {

CostParams CostParams::impact_k_03() { return CostParams{}; }

CostParams CostParams::impact_k_02() {
    CostParams p;
    p.impact_k = 0.2;
    return p;
}

void CostParams::validate() const {
    if (!(impact_k >= 0.0)) throw std::invalid_argument("impact_k must be >= 0");
    if (!(aum > 0.0)) throw std::invalid_argument("aum must be > 0");
    if (!(static_cost_bps >= 0.0)) throw std::invalid_argument("static_cost_bps must be >= 0");
    if (vol_window < 2) throw std::invalid_argument("vol_window must be >= 2");
    if (adv_window < 1) throw std::invalid_argument("adv_window must be >= 1");
}

double spread_cost(double bid, double ask) {
    if (is_missing(bid) || is_missing(ask) || bid <= 0.0 || ask < bid) return kMissing;
    const double mid = 0.5 * (ask + bid);
    return (ask - bid) / (2.0 * mid);
}

double impact_cost(const CostParams& params, double sigma, double q_dollars, double adv_dollars) {
    if (is_missing(sigma) || is_missing(q_dollars) || is_missing(adv_dollars) || adv_dollars <= 0.0) return kMissing;
    return params.impact_k * sigma * std::sqrt(std::abs(q_dollars) / adv_dollars);
}

Panel compute_cost_inputs(const Panel& panel, const CostParams& params, const CostColumns& columns) {
    params.validate();
    const auto bid = panel.column(columns.bid);
    const auto ask = panel.column(columns.ask);
    const auto ret = panel.column(columns.ret);
    const auto dv = panel.column(columns.dollar_volume);
    const std::size_t n = panel.rows();
    std::vector<double> half_spread(n), sigma(n, kMissing), adv(n, kMissing);
    for (std::size_t r = 0; r < n; ++r) half_spread[r] = spread_cost(bid[r], ask[r]);

    const auto vw = static_cast<std::size_t>(params.vol_window);
    const auto aw = static_cast<std::size_t>(params.adv_window);
    parallel_for(panel.num_securities(), [&](std::size_t s) {
        const RowRange rr = panel.security_rows(s);
        std::vector<double> buf;
        for (std::size_t t = rr.begin; t < rr.end; ++t) {
            buf.clear();
            for (std::size_t k = (t + 1 >= rr.begin + vw ? t + 1 - vw : rr.begin); k <= t; ++k)
                if (!is_missing(ret[k])) buf.push_back(ret[k]);
            if (buf.size() >= 2) {
                double mean = 0.0;
                for (double v : buf) mean += v;
                mean /= static_cast<double>(buf.size());
                double ss = 0.0;
                for (double v : buf) ss += (v - mean) * (v - mean);
                sigma[t] = std::sqrt(ss / static_cast<double>(buf.size() - 1));
            }
            buf.clear();
            for (std::size_t k = (t + 1 >= rr.begin + aw ? t + 1 - aw : rr.begin); k <= t; ++k)
                if (!is_missing(dv[k])) buf.push_back(dv[k]);
            if (!buf.empty()) {
                std::sort(buf.begin(), buf.end());
                const std::size_t m = buf.size() / 2;
                adv[t] = buf.size() % 2 == 1 ? buf[m] : 0.5 * (buf[m - 1] + buf[m]);
            }
        }
    });
    return panel.with_column("half_spread", std::move(half_spread))
        .with_column("sigma", std::move(sigma))
        .with_column("adv", std::move(adv));
}

std::vector<std::uint8_t> liquidity_filter(const Panel& cost_inputs, const LiquidityRule& rule) {
    const auto hs = cost_inputs.column("half_spread");
    const auto adv = cost_inputs.column("adv");
    std::vector<std::uint8_t> mask(cost_inputs.rows(), 0);
    for (std::size_t r = 0; r < mask.size(); ++r) {
        if (is_missing(hs[r]) || is_missing(adv[r])) continue;
        const double full_spread_bps = 2.0 * hs[r] * 1e4;
        mask[r] = adv[r] >= rule.min_adv_dollars && full_spread_bps <= rule.max_spread_bps;
    }
    return mask;
}

std::vector<std::uint8_t> align_mask(const std::vector<std::uint8_t>& mask, const Panel& panel,
                                     const ScorePanel& scores) {
    if (mask.size() != panel.rows()) throw std::invalid_argument("align_mask: mask size differs from panel rows");
    const Panel& keys = scores.keys();
    std::vector<std::uint8_t> out(keys.rows(), 0);
    const auto sec = keys.row_security();
    const auto dates = keys.row_dates();
    std::vector<std::optional<std::size_t>> to_panel;
    for (const auto& id : keys.securities()) to_panel.push_back(panel.find_security(id));
    for (std::size_t r = 0; r < out.size(); ++r) {
        const auto& s = to_panel[sec[r]];
        if (!s) continue;
        if (const auto row = panel.find_row(*s, dates[r])) out[r] = mask[*row];
    }
    return out;
}

namespace {

/// Calls f(security, delta) for every name whose weight changed from `prev` to `cur`.
template <class F>
void for_each_trade(const WeightBook::Day* prev, const WeightBook::Day& cur, F&& f) {
    static const WeightBook::Day empty{};
    const auto& p = prev ? *prev : empty;
    std::size_t i = 0, j = 0;
    while (i < p.securities.size() || j < cur.securities.size()) {
        if (j == cur.securities.size() || (i < p.securities.size() && p.securities[i] < cur.securities[j])) {
            f(p.securities[i], -p.weights[i]);
            ++i;
        } else if (i == p.securities.size() || cur.securities[j] < p.securities[i]) {
            f(cur.securities[j], cur.weights[j]);
            ++j;
        } else {
            const double d = cur.weights[j] - p.weights[i];
            if (d != 0.0) f(cur.securities[j], d);
            ++i;
            ++j;
        }
    }
}

} // namespace

ReturnSeries turnover(const WeightBook& book) {
    ReturnSeries out;
    const WeightBook::Day* prev = nullptr;
    for (const auto& day : book.days) {
        double t = 0.0;
        for_each_trade(prev, day, [&](std::uint32_t, double d) { t += std::abs(d); });
        out.dates.push_back(day.date);
        out.values.push_back(t);
        prev = &day;
    }
    return out;
}

NetResult net_returns(const ReturnSeries& gross, const WeightBook& book, const Panel& cost_inputs,
                      const CostParams& params) {
    params.validate();
    if (gross.size() != book.days.size()) throw std::invalid_argument("net_returns: gross series and book differ in length");
    const bool dynamic = params.mode == CostMode::spread_impact;
    std::span<const double> hs, sigma, adv;
    std::vector<std::optional<std::size_t>> to_panel;
    if (dynamic) {
        hs = cost_inputs.column("half_spread");
        sigma = cost_inputs.column("sigma");
        adv = cost_inputs.column("adv");
        for (const auto& id : *book.universe) to_panel.push_back(cost_inputs.find_security(id));
    }
    const double multiplier = params.round_trip ? 2.0 : 1.0;
    const double fallback = params.static_cost_bps * 1e-4;

    NetResult res;
    double traded = 0.0, charged = 0.0;
    const WeightBook::Day* prev = nullptr;
    for (std::size_t t = 0; t < book.days.size(); ++t) {
        const auto& day = book.days[t];
        if (gross.dates[t] != day.date) throw std::invalid_argument("net_returns: gross series dates differ from book");
        double cost = 0.0, to = 0.0;
        for_each_trade(prev, day, [&](std::uint32_t s, double d) {
            const double q = std::abs(d);
            TradeRecord rec{day.date, (*book.universe)[s], d, 0.0, 0.0, false};
            double c = fallback;
            if (dynamic) {
                double sp = kMissing, im = kMissing;
                if (const auto& ps = to_panel[s]) {
                    if (const auto row = cost_inputs.find_row(*ps, day.date)) {
                        sp = hs[*row];
                        im = impact_cost(params, sigma[*row], q * params.aum, adv[*row]);
                    }
                }
                if (is_missing(sp) || is_missing(im)) {
                    rec.fallback = true;
                    ++res.fallback_trades;
                } else {
                    c = sp + im;
                    rec.spread_bps = sp * 1e4 * multiplier;
                    rec.impact_bps = im * 1e4 * multiplier;
                }
            }
            if (!dynamic || rec.fallback) rec.spread_bps = fallback * 1e4 * multiplier;
            cost += q * c * multiplier;
            to += q;
            res.ledger.push_back(std::move(rec));
        });
        traded += to;
        charged += cost;
        res.net.dates.push_back(day.date);
        res.net.values.push_back(gross.values[t] - cost);
        res.cost.dates.push_back(day.date);
        res.cost.values.push_back(cost);
        res.turnover.dates.push_back(day.date);
        res.turnover.values.push_back(to);
        prev = &day;
    }
    res.net.missing_terms = gross.missing_terms;
    res.average_cost_bps = traded > 0.0 ? charged / traded * 1e4 : 0.0;
    return res;
}

double break_even_cost_bps(const ReturnSeries& gross, const ReturnSeries& turnover) {
    if (gross.empty() || turnover.empty()) throw std::domain_error("break_even_cost: empty series");
    double g = 0.0, t = 0.0;
    for (double v : gross.values) g += v;
    for (double v : turnover.values) t += v;
    g /= static_cast<double>(gross.size());
    t /= static_cast<double>(turnover.size());
    if (!(t > 0.0)) throw std::domain_error("break_even_cost: mean turnover is zero");
    return g / t * 1e4;
}

void write_trade_ledger(std::ostream& out, const std::vector<TradeRecord>& ledger, char delimiter) {
    out << "date" << delimiter << "id" << delimiter << "delta_weight" << delimiter << "spread_bps" << delimiter
        << "impact_bps" << delimiter << "fallback\n";
    for (const auto& t : ledger)
        out << format_date(t.date) << delimiter << t.id << delimiter << format_double(t.delta_weight) << delimiter
            << format_double(t.spread_bps) << delimiter << format_double(t.impact_bps) << delimiter
            << (t.fallback ? 1 : 0) << '\n';
}

} // namespace xsa
