#pragma once

#include <compare>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xsa {

/// Missing numeric values are represented as quiet NaN throughout.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Calendar day stored as a day ordinal relative to 1970-01-01.
class Date {
  public:
    constexpr Date() = default;
    constexpr explicit Date(std::int32_t ordinal) : ordinal_(ordinal) {}

    static Date from_ymd(int year, unsigned month, unsigned day);

    constexpr std::int32_t ordinal() const { return ordinal_; }
    int year() const;
    unsigned month() const;
    /// Index of the Monday-starting week containing this day.
    std::int32_t week_index() const;
    /// year * 12 + month, a monotone key for calendar months.
    std::int32_t month_index() const;

    friend constexpr auto operator<=>(Date, Date) = default;

  private:
    std::int32_t ordinal_ = 0;
};

/// Parses ISO `YYYY-MM-DD` (also accepts `YYYYMMDD`).
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

/// Daily series keyed by date (strictly increasing).
struct ReturnSeries {
    std::vector<Date> dates;
    std::vector<double> values;
    /// Number of position terms dropped because the return was missing.
    std::size_t missing_terms = 0;

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
};

/// Inner join of two series on date.
struct AlignedPair {
    std::vector<Date> dates;
    std::vector<double> a;
    std::vector<double> b;
};
AlignedPair align_on_dates(const ReturnSeries& a, const ReturnSeries& b);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

} // namespace xsa
