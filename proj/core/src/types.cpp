#include "xsalpha/types.hpp"

#include <charconv>
#include <cstdio>
#include <chrono>

namespace xsa {

namespace {

std::chrono::year_month_day to_ymd(Date d) {
    return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{d.ordinal()}}};
}

bool parse_uint(std::string_view s, unsigned& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

} // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
    const std::chrono::sys_days sd{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
    return Date{static_cast<std::int32_t>(sd.time_since_epoch().count())};
}

int Date::year() const { return static_cast<int>(to_ymd(*this).year()); }

unsigned Date::month() const { return static_cast<unsigned>(to_ymd(*this).month()); }

std::int32_t Date::week_index() const {
    // 1970-01-01 was a Thursday; shift so weeks start on Monday.
    const std::int32_t shifted = ordinal_ + 3;
    return shifted >= 0 ? shifted / 7 : -((-shifted + 6) / 7);
}

std::int32_t Date::month_index() const { return year() * 12 + static_cast<std::int32_t>(month()) - 1; }

std::optional<Date> parse_date(std::string_view text) {
    unsigned y = 0, m = 0, d = 0;
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        if (!parse_uint(text.substr(0, 4), y) || !parse_uint(text.substr(5, 2), m) ||
            !parse_uint(text.substr(8, 2), d))
            return std::nullopt;
    } else if (text.size() == 8) {
        if (!parse_uint(text.substr(0, 4), y) || !parse_uint(text.substr(4, 2), m) ||
            !parse_uint(text.substr(6, 2), d))
            return std::nullopt;
    } else {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())};
}

std::string format_date(Date d) {
    const auto ymd = to_ymd(d);
    char buf[16];
    const int y = static_cast<int>(ymd.year());
    const unsigned m = static_cast<unsigned>(ymd.month());
    const unsigned day = static_cast<unsigned>(ymd.day());
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, day);
    return buf;
}

AlignedPair align_on_dates(const ReturnSeries& a, const ReturnSeries& b) {
    AlignedPair out;
    std::size_t i = 0, j = 0;
    while (i < a.dates.size() && j < b.dates.size()) {
        if (a.dates[i] < b.dates[j]) {
            ++i;
        } else if (b.dates[j] < a.dates[i]) {
            ++j;
        } else {
            out.dates.push_back(a.dates[i]);
            out.a.push_back(a.values[i]);
            out.b.push_back(b.values[j]);
            ++i;
            ++j;
        }
    }
    return out;
}

std::string format_double(double v) {
    if (is_missing(v)) return "";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace xsa
