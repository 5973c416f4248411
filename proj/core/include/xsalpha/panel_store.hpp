#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xsalpha/panel.hpp"

namespace xsa {

/// Column mapping for delimited-text panel files.
struct PanelFormat {
    std::string id_column = "id";
    std::string date_column = "date";
    /// Columns to load; empty loads every other column.
    std::vector<std::string> value_columns;
    /// Field separator; '\0' picks tab for .tsv files and comma otherwise.
    char delimiter = '\0';
};

/// Reads a header-first delimited file. Empty fields and NA/NaN/null tokens
/// load as missing. Throws DataError on duplicate keys, unknown columns, or
/// unparseable dates/numbers (the message carries the 1-based data row).
Panel load_panel(const std::filesystem::path& path, const PanelFormat& format = {});
Panel read_panel(std::istream& in, const PanelFormat& format = {});

/// Writes id, date, then `columns` (all columns when empty). Numbers use the
/// shortest round-trip representation; missing values are empty fields.
void write_panel(std::ostream& out, const Panel& panel, const std::vector<std::string>& columns = {},
                 char delimiter = ',');
void write_panel(const std::filesystem::path& path, const Panel& panel, const std::vector<std::string>& columns = {},
                 char delimiter = ',');

struct LogReturns {
    Panel panel;
    /// Returns left missing because a price in the pair was non-positive.
    std::size_t warnings = 0;
};

/// Adds `ret` = ln(P_t / P_{t-1}) on each security's own calendar.
LogReturns compute_log_returns(const Panel& panel, std::string_view price_column, std::string_view out_column = "ret");

std::string forward_return_column(int lag);

/// Adds `fwd_ret_lag{N}`: the return `lag + 1` rows ahead on the security's
/// calendar, i.e. the return earned from t+N to t+N+1.
Panel forward_return(const Panel& panel, int lag, std::string_view return_column = "ret");

struct UniverseSpec {
    std::size_t top_k = 2500;
    std::string cap_column = "cap";
    /// Rows where any of these columns is non-zero (and present) are dropped.
    std::vector<std::string> exclusion_flags;
};

/// Per date keeps the `top_k` largest securities by cap after exclusions.
/// Ties at the boundary go to the lexicographically smaller id.
Panel apply_universe_filter(const Panel& panel, const UniverseSpec& spec);

/// Scores re-keyed onto `grid`: each grid row (i, t) receives security i's
/// most recent score at or before t, missing before its first observation.
ScorePanel forward_fill_to_daily(const ScorePanel& sparse, const Panel& grid);

} // namespace xsa
