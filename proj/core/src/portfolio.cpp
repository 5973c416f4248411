#include "xsalpha/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "xsalpha/parallel.hpp"

namespace xsa {

ScorePanel standardize_and_winsorize(const ScorePanel& scores, double clip) {
    const Panel& keys = scores.keys();
    const auto x = scores.values();
    std::vector<double> z(x.size(), kMissing);
    parallel_for(keys.num_dates(), [&](std::size_t d) {
        const auto rows = keys.rows_on(d);
        double sum = 0.0;
        std::size_t n = 0;
        for (auto r : rows)
            if (!is_missing(x[r])) {
                sum += x[r];
                ++n;
            }
        if (n == 0) return;
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (auto r : rows)
            if (!is_missing(x[r])) ss += (x[r] - mean) * (x[r] - mean);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        for (auto r : rows) {
            if (is_missing(x[r])) continue;
            z[r] = sd > 0.0 ? std::clamp((x[r] - mean) / sd, -clip, clip) : 0.0;
        }
    });
    return scores.with_values(std::move(z));
}

std::optional<std::vector<double>> long_short_weights(std::span<const double> alpha) {
    double pos = 0.0, neg = 0.0;
    for (double a : alpha) {
        if (is_missing(a)) continue;
        if (a > 0.0) pos += a;
        if (a < 0.0) neg -= a;
    }
    if (!(pos > 0.0) || !(neg > 0.0)) return std::nullopt;
    std::vector<double> w(alpha.size(), 0.0);
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double a = alpha[i];
        if (is_missing(a)) continue;
        if (a > 0.0) w[i] = a / pos;
        if (a < 0.0) w[i] = a / neg;
    }
    return w;
}

std::size_t WeightBook::flagged_days() const {
    return static_cast<std::size_t>(std::count_if(days.begin(), days.end(), [](const Day& d) { return d.flagged; }));
}

WeightBook weights_from_scores(const ScorePanel& alpha_tilde) {
    const Panel& keys = alpha_tilde.keys();
    const auto a = alpha_tilde.values();
    const auto sec = keys.row_security();
    WeightBook book;
    book.universe = keys.security_table();
    book.days.resize(keys.num_dates());
    parallel_for(keys.num_dates(), [&](std::size_t d) {
        auto& day = book.days[d];
        day.date = keys.calendar()[d];
        const auto rows = keys.rows_on(d);
        std::vector<double> alpha(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) alpha[k] = a[rows[k]];
        const auto w = long_short_weights(alpha);
        if (!w) {
            day.flagged = true;
            return;
        }
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if ((*w)[k] == 0.0) continue;
            day.securities.push_back(sec[rows[k]]);
            day.weights.push_back((*w)[k]);
        }
    });
    return book;
}

ScorePanel smooth_scores(const ScorePanel& scores, int window) {
    if (window < 1) throw std::invalid_argument("smooth_scores: window must be >= 1");
    if (window == 1) return scores;
    const Panel& keys = scores.keys();
    const auto x = scores.values();
    std::vector<double> out(x.size(), kMissing);
    const auto w = static_cast<std::size_t>(window);
    parallel_for(keys.num_securities(), [&](std::size_t s) {
        const RowRange rr = keys.security_rows(s);
        for (std::size_t t = rr.begin; t < rr.end; ++t) {
            const std::size_t lo = t + 1 >= rr.begin + w ? t + 1 - w : rr.begin;
            double sum = 0.0;
            std::size_t n = 0;
            for (std::size_t k = lo; k <= t; ++k)
                if (!is_missing(x[k])) {
                    sum += x[k];
                    ++n;
                }
            if (n > 0) out[t] = sum / static_cast<double>(n);
        }
    });
    return scores.with_values(std::move(out));
}

ScorePanel ensemble_scores(std::span<const ScorePanel> inputs) {
    if (inputs.empty()) throw std::invalid_argument("ensemble_scores: no inputs");
    std::map<std::pair<std::string, Date>, std::pair<double, std::size_t>> cells;
    for (const auto& in : inputs) {
        const Panel& keys = in.keys();
        const auto v = in.values();
        const auto dates = keys.row_dates();
        const auto sec = keys.row_security();
        for (std::size_t r = 0; r < keys.rows(); ++r) {
            auto& cell = cells[{keys.security_id(sec[r]), dates[r]}];
            if (is_missing(v[r])) continue;
            cell.first += v[r];
            ++cell.second;
        }
    }
    PanelBuilder builder({"score"});
    for (const auto& [key, cell] : cells)
        builder.add_row(key.first, key.second, {cell.second > 0 ? cell.first / static_cast<double>(cell.second) : kMissing});
    return ScorePanel::from_column(std::move(builder).build(), "score");
}

ReturnSeries portfolio_returns(const WeightBook& book, const Panel& panel, std::string_view return_column) {
    const auto ret = panel.column(return_column);
    std::vector<std::optional<std::size_t>> to_panel;
    if (book.universe)
        for (const auto& id : *book.universe) to_panel.push_back(panel.find_security(id));

    ReturnSeries out;
    out.dates.reserve(book.days.size());
    out.values.reserve(book.days.size());
    for (const auto& day : book.days) {
        double r_t = 0.0;
        for (std::size_t k = 0; k < day.securities.size(); ++k) {
            const auto& s = to_panel[day.securities[k]];
            const auto row = s ? panel.find_row(*s, day.date) : std::nullopt;
            if (!row || is_missing(ret[*row])) {
                ++out.missing_terms;
                continue;
            }
            r_t += day.weights[k] * ret[*row];
        }
        out.dates.push_back(day.date);
        out.values.push_back(r_t);
    }
    return out;
}

std::optional<RebalanceFrequency> parse_rebalance_frequency(std::string_view text) {
    if (text == "daily") return RebalanceFrequency::daily;
    if (text == "weekly") return RebalanceFrequency::weekly;
    if (text == "monthly") return RebalanceFrequency::monthly;
    return std::nullopt;
}

std::string_view to_string(RebalanceFrequency f) {
    switch (f) {
    case RebalanceFrequency::daily: return "daily";
    case RebalanceFrequency::weekly: return "weekly";
    case RebalanceFrequency::monthly: return "monthly";
    }
    return "daily";
}

WeightBook hold_between_rebalances(const WeightBook& book, RebalanceFrequency frequency) {
    if (frequency == RebalanceFrequency::daily) return book;
    const auto period = [&](Date d) {
        return frequency == RebalanceFrequency::weekly ? d.week_index() : d.month_index();
    };
    WeightBook out = book;
    const WeightBook::Day* anchor = nullptr;
    for (std::size_t i = 0; i < out.days.size(); ++i) {
        auto& day = out.days[i];
        if (anchor && period(anchor->date) == period(day.date)) {
            day.securities = anchor->securities;
            day.weights = anchor->weights;
            day.flagged = anchor->flagged;
            day.rebalanced = false;
        } else {
            anchor = &book.days[i];
        }
    }
    return out;
}

WeightBook build_weight_book(const ScorePanel& raw_scores, const PortfolioOptions& options,
                             std::span<const std::uint8_t> tradable) {
    ScorePanel s = smooth_scores(raw_scores, options.smoothing_window);
    if (!tradable.empty()) {
        if (tradable.size() != s.rows()) throw std::invalid_argument("build_weight_book: tradable mask size mismatch");
        std::vector<double> v(s.values().begin(), s.values().end());
        for (std::size_t r = 0; r < v.size(); ++r)
            if (!tradable[r]) v[r] = kMissing;
        s = s.with_values(std::move(v));
    }
    const WeightBook daily = weights_from_scores(standardize_and_winsorize(s, options.winsor_clip));
    return hold_between_rebalances(daily, options.rebalance);
}

void write_weight_book(std::ostream& out, const WeightBook& book, char delimiter) {
    out << "date" << delimiter << "id" << delimiter << "weight\n";
    for (const auto& day : book.days) {
        const std::string date = format_date(day.date);
        for (std::size_t k = 0; k < day.securities.size(); ++k)
            out << date << delimiter << (*book.universe)[day.securities[k]] << delimiter << format_double(day.weights[k])
                << '\n';
    }
}

} // namespace xsa
