#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xsalpha/types.hpp"

namespace xsa {

/// Half-open row interval [begin, end).
struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

/// Long-format table keyed by (security id, date), sorted by (id, date).
///
/// The key index and every column are immutable and shared between copies,
/// so deriving a panel with one more column costs one column allocation.
/// Securities are numbered by their position in the sorted id list; dates
/// are numbered by their position in the panel calendar (union of dates).
class Panel {
  public:
    struct Index;

    Panel();

    std::size_t rows() const;
    std::size_t num_securities() const;
    std::size_t num_dates() const;

    std::span<const std::string> securities() const;
    std::shared_ptr<const std::vector<std::string>> security_table() const;
    const std::string& security_id(std::size_t security) const;
    std::optional<std::size_t> find_security(std::string_view id) const;

    std::span<const std::uint32_t> row_security() const;
    std::span<const Date> row_dates() const;
    std::span<const std::uint32_t> row_date_index() const;

    /// Rows of one security, in date order.
    RowRange security_rows(std::size_t security) const;
    /// Sorted union of all dates present.
    std::span<const Date> calendar() const;
    /// Rows observed on calendar()[date_index], in security order.
    std::span<const std::size_t> rows_on(std::size_t date_index) const;
    std::optional<std::size_t> find_date(Date d) const;
    std::optional<std::size_t> find_row(std::size_t security, Date d) const;

    bool has_column(std::string_view name) const;
    /// Throws DataError naming the column when absent.
    std::span<const double> column(std::string_view name) const;
    const std::vector<std::string>& column_names() const { return names_; }

    /// Returns a panel with `name` added (or replaced). Size must equal rows().
    Panel with_column(std::string name, std::vector<double> values) const;
    /// Same keys, no columns.
    Panel keys_only() const;
    /// Sub-panel over the given rows (must be strictly increasing).
    Panel select_rows(std::span<const std::size_t> rows) const;
    /// Sub-panel keeping only the named columns, in the given order.
    Panel select_columns(std::span<const std::string> names) const;

    const std::shared_ptr<const Index>& index() const { return index_; }

  private:
    friend class PanelBuilder;
    explicit Panel(std::shared_ptr<const Index> index);

    std::shared_ptr<const Index> index_;
    std::vector<std::string> names_;
    std::vector<std::shared_ptr<const std::vector<double>>> columns_;
};

/// Accumulates rows in any order; build() sorts by (id, date) and enforces
/// key uniqueness.
class PanelBuilder {
  public:
    explicit PanelBuilder(std::vector<std::string> column_names = {});

    /// `values` must have one entry per column declared at construction.
    void add_row(std::string_view security, Date date, std::span<const double> values);
    void add_row(std::string_view security, Date date, std::initializer_list<double> values) {
        add_row(security, date, std::span<const double>(values.begin(), values.size()));
    }
    std::size_t rows() const { return dates_.size(); }

    /// Throws DataError naming the first duplicated (id, date) pair in
    /// insertion order.
    Panel build() &&;

  private:
    std::vector<std::string> names_;
    std::vector<std::string> ids_;
    std::vector<Date> dates_;
    std::vector<double> values_;
};

/// Per-(security, date) scores keyed like a panel.
class ScorePanel {
  public:
    ScorePanel() = default;
    /// `values` must have one entry per row of `keys`; columns of `keys` are dropped.
    ScorePanel(const Panel& keys, std::vector<double> values);

    static ScorePanel from_column(const Panel& panel, std::string_view column);

    const Panel& keys() const { return keys_; }
    std::span<const double> values() const;
    std::size_t rows() const { return keys_.rows(); }
    bool empty() const { return keys_.rows() == 0; }

    ScorePanel with_values(std::vector<double> values) const;
    /// The scores as a panel column named `name`.
    Panel as_panel(std::string name = "score") const;

  private:
    Panel keys_;
    std::shared_ptr<const std::vector<double>> values_;
};

} // namespace xsa
