#include "xsalpha/panel.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "xsalpha/errors.hpp"

namespace xsa {

struct Panel::Index {
    std::shared_ptr<const std::vector<std::string>> securities;
    std::vector<std::uint32_t> row_security;
    std::vector<Date> row_date;
    std::vector<std::uint32_t> row_date_index;
    std::vector<std::size_t> security_offsets;
    std::vector<Date> calendar;
    std::vector<std::size_t> date_offsets;
    std::vector<std::size_t> by_date_rows;
};

namespace {

using Index = Panel::Index;

/// Fills the derived lookup tables from sorted row keys.
std::shared_ptr<const Index> make_index(std::shared_ptr<const std::vector<std::string>> securities,
                                        std::vector<std::uint32_t> row_security,
                                        std::vector<Date> row_date) {
    auto idx = std::make_shared<Index>();
    const std::size_t n = row_security.size();
    const std::size_t s_count = securities->size();

    idx->security_offsets.assign(s_count + 1, 0);
    for (auto s : row_security) ++idx->security_offsets[s + 1];
    std::partial_sum(idx->security_offsets.begin(), idx->security_offsets.end(), idx->security_offsets.begin());

    idx->calendar = row_date;
    std::sort(idx->calendar.begin(), idx->calendar.end());
    idx->calendar.erase(std::unique(idx->calendar.begin(), idx->calendar.end()), idx->calendar.end());

    idx->row_date_index.resize(n);
    idx->date_offsets.assign(idx->calendar.size() + 1, 0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto it = std::lower_bound(idx->calendar.begin(), idx->calendar.end(), row_date[r]);
        const auto d = static_cast<std::uint32_t>(it - idx->calendar.begin());
        idx->row_date_index[r] = d;
        ++idx->date_offsets[d + 1];
    }
    std::partial_sum(idx->date_offsets.begin(), idx->date_offsets.end(), idx->date_offsets.begin());
    idx->by_date_rows.resize(n);
    std::vector<std::size_t> cursor(idx->date_offsets.begin(), idx->date_offsets.end() - 1);
    // Rows are sorted by security, so each date bucket ends up in security order.
    for (std::size_t r = 0; r < n; ++r) idx->by_date_rows[cursor[idx->row_date_index[r]]++] = r;

    idx->securities = std::move(securities);
    idx->row_security = std::move(row_security);
    idx->row_date = std::move(row_date);
    return idx;
}

std::shared_ptr<const Index> empty_index() {
    static const auto idx = make_index(std::make_shared<const std::vector<std::string>>(), {}, {});
    return idx;
}

} // namespace

Panel::Panel() : index_(empty_index()) {}

Panel::Panel(std::shared_ptr<const Index> index) : index_(std::move(index)) {}

std::size_t Panel::rows() const { return index_->row_security.size(); }
std::size_t Panel::num_securities() const { return index_->securities->size(); }
std::size_t Panel::num_dates() const { return index_->calendar.size(); }

std::span<const std::string> Panel::securities() const { return *index_->securities; }
std::shared_ptr<const std::vector<std::string>> Panel::security_table() const { return index_->securities; }
const std::string& Panel::security_id(std::size_t security) const { return index_->securities->at(security); }

std::optional<std::size_t> Panel::find_security(std::string_view id) const {
    const auto& ids = *index_->securities;
    const auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
}

std::span<const std::uint32_t> Panel::row_security() const { return index_->row_security; }
std::span<const Date> Panel::row_dates() const { return index_->row_date; }
std::span<const std::uint32_t> Panel::row_date_index() const { return index_->row_date_index; }

RowRange Panel::security_rows(std::size_t security) const {
    return {index_->security_offsets.at(security), index_->security_offsets.at(security + 1)};
}

std::span<const Date> Panel::calendar() const { return index_->calendar; }

std::span<const std::size_t> Panel::rows_on(std::size_t date_index) const {
    const auto lo = index_->date_offsets.at(date_index);
    const auto hi = index_->date_offsets.at(date_index + 1);
    return std::span<const std::size_t>(index_->by_date_rows).subspan(lo, hi - lo);
}

std::optional<std::size_t> Panel::find_date(Date d) const {
    const auto& cal = index_->calendar;
    const auto it = std::lower_bound(cal.begin(), cal.end(), d);
    if (it == cal.end() || *it != d) return std::nullopt;
    return static_cast<std::size_t>(it - cal.begin());
}

std::optional<std::size_t> Panel::find_row(std::size_t security, Date d) const {
    const auto range = security_rows(security);
    const auto first = index_->row_date.begin() + static_cast<std::ptrdiff_t>(range.begin);
    const auto last = index_->row_date.begin() + static_cast<std::ptrdiff_t>(range.end);
    const auto it = std::lower_bound(first, last, d);
    if (it == last || *it != d) return std::nullopt;
    return static_cast<std::size_t>(it - index_->row_date.begin());
}

bool Panel::has_column(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::span<const double> Panel::column(std::string_view name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw DataError(fmt::format("panel has no column '{}'", name));
    return *columns_[static_cast<std::size_t>(it - names_.begin())];
}

Panel Panel::with_column(std::string name, std::vector<double> values) const {
    if (values.size() != rows())
        throw std::invalid_argument(
            fmt::format("column '{}' has {} values for a panel of {} rows", name, values.size(), rows()));
    Panel out = *this;
    auto data = std::make_shared<const std::vector<double>>(std::move(values));
    const auto it = std::find(out.names_.begin(), out.names_.end(), name);
    if (it != out.names_.end()) {
        out.columns_[static_cast<std::size_t>(it - out.names_.begin())] = std::move(data);
    } else {
        out.names_.push_back(std::move(name));
        out.columns_.push_back(std::move(data));
    }
    return out;
}

Panel Panel::keys_only() const { return Panel(index_); }

Panel Panel::select_rows(std::span<const std::size_t> rows) const {
    std::vector<std::uint32_t> used(num_securities(), 0);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] >= this->rows() || (k > 0 && rows[k] <= rows[k - 1]))
            throw std::invalid_argument("select_rows: rows must be strictly increasing and in range");
        used[index_->row_security[rows[k]]] = 1;
    }
    // Re-number securities so the id table only lists securities that remain.
    std::vector<std::uint32_t> remap(num_securities(), 0);
    auto ids = std::make_shared<std::vector<std::string>>();
    for (std::size_t s = 0; s < num_securities(); ++s) {
        if (!used[s]) continue;
        remap[s] = static_cast<std::uint32_t>(ids->size());
        ids->push_back((*index_->securities)[s]);
    }
    std::vector<std::uint32_t> row_security(rows.size());
    std::vector<Date> row_date(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        row_security[k] = remap[index_->row_security[rows[k]]];
        row_date[k] = index_->row_date[rows[k]];
    }
    Panel out(make_index(std::move(ids), std::move(row_security), std::move(row_date)));
    for (std::size_t c = 0; c < names_.size(); ++c) {
        std::vector<double> values(rows.size());
        const auto& src = *columns_[c];
        for (std::size_t k = 0; k < rows.size(); ++k) values[k] = src[rows[k]];
        out.names_.push_back(names_[c]);
        out.columns_.push_back(std::make_shared<const std::vector<double>>(std::move(values)));
    }
    return out;
}

Panel Panel::select_columns(std::span<const std::string> names) const {
    Panel out(index_);
    for (const auto& name : names) {
        const auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw DataError(fmt::format("panel has no column '{}'", name));
        out.names_.push_back(name);
        out.columns_.push_back(columns_[static_cast<std::size_t>(it - names_.begin())]);
    }
    return out;
}

PanelBuilder::PanelBuilder(std::vector<std::string> column_names) : names_(std::move(column_names)) {}

void PanelBuilder::add_row(std::string_view security, Date date, std::span<const double> values) {
    if (values.size() != names_.size())
        throw std::invalid_argument(
            fmt::format("add_row: expected {} values, got {}", names_.size(), values.size()));
    ids_.emplace_back(security);
    dates_.push_back(date);
    values_.insert(values_.end(), values.begin(), values.end());
}

Panel PanelBuilder::build() && {
    const std::size_t n = ids_.size();
    const std::size_t width = names_.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ids_[a] != ids_[b]) return ids_[a] < ids_[b];
        return dates_[a] < dates_[b];
    });

    // Stable sort keeps insertion order among equal keys, so the later row of
    // each duplicate pair is order[k]; report the one inserted first overall.
    std::optional<std::size_t> first_dup;
    for (std::size_t k = 1; k < n; ++k) {
        if (ids_[order[k]] == ids_[order[k - 1]] && dates_[order[k]] == dates_[order[k - 1]]) {
            if (!first_dup || order[k] < *first_dup) first_dup = order[k];
        }
    }
    if (first_dup)
        throw DataError(fmt::format("duplicate (security, date) pair ({}, {}) at input row {}", ids_[*first_dup],
                                    format_date(dates_[*first_dup]), *first_dup + 1));

    auto ids = std::make_shared<std::vector<std::string>>();
    std::vector<std::uint32_t> row_security(n);
    std::vector<Date> row_date(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& id = ids_[order[k]];
        if (ids->empty() || ids->back() != id) ids->push_back(id);
        row_security[k] = static_cast<std::uint32_t>(ids->size() - 1);
        row_date[k] = dates_[order[k]];
    }

    Panel out(make_index(std::move(ids), std::move(row_security), std::move(row_date)));
    for (std::size_t c = 0; c < width; ++c) {
        std::vector<double> col(n);
        for (std::size_t k = 0; k < n; ++k) col[k] = values_[order[k] * width + c];
        out.names_.push_back(names_[c]);
        out.columns_.push_back(std::make_shared<const std::vector<double>>(std::move(col)));
    }
    return out;
}

ScorePanel::ScorePanel(const Panel& keys, std::vector<double> values)
    : keys_(keys.keys_only()), values_(std::make_shared<const std::vector<double>>(std::move(values))) {
    if (values_->size() != keys_.rows())
        throw std::invalid_argument(
            fmt::format("ScorePanel: {} scores for {} keyed rows", values_->size(), keys_.rows()));
}

ScorePanel ScorePanel::from_column(const Panel& panel, std::string_view column) {
    const auto col = panel.column(column);
    return ScorePanel(panel, std::vector<double>(col.begin(), col.end()));
}

std::span<const double> ScorePanel::values() const {
    if (!values_) return {};
    return *values_;
}

ScorePanel ScorePanel::with_values(std::vector<double> values) const { return ScorePanel(keys_, std::move(values)); }

Panel ScorePanel::as_panel(std::string name) const {
    const auto v = values();
    return keys_.with_column(std::move(name), std::vector<double>(v.begin(), v.end()));
}

} // namespace xsa
