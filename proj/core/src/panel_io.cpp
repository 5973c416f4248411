#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "xsalpha/errors.hpp"
#include "xsalpha/panel_store.hpp"

namespace xsa {

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool is_missing_token(std::string_view s) {
    return s.empty() || s == "NA" || s == "N/A" || s == "NaN" || s == "nan" || s == "null" || s == "NULL";
}

std::size_t find_field(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(fmt::format("input has no column '{}'", name));
    return static_cast<std::size_t>(it - header.begin());
}

} // namespace

Panel read_panel(std::istream& in, const PanelFormat& format) {
    const char delim = format.delimiter == '\0' ? ',' : format.delimiter;
    std::string line;
    if (!std::getline(in, line)) throw DataError("input is empty; a header row is required");
    auto header = split_fields(line, delim);
    for (auto& h : header) h = std::string(trim(h));

    const std::size_t id_field = find_field(header, format.id_column);
    const std::size_t date_field = find_field(header, format.date_column);
    std::vector<std::string> names = format.value_columns;
    if (names.empty()) {
        for (std::size_t f = 0; f < header.size(); ++f)
            if (f != id_field && f != date_field) names.push_back(header[f]);
    }
    std::vector<std::size_t> fields;
    for (const auto& n : names) fields.push_back(find_field(header, n));

    PanelBuilder builder(names);
    std::vector<double> values(names.size());
    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++data_row;
        const auto parts = split_fields(line, delim);
        if (parts.size() != header.size())
            throw DataError(fmt::format("row {}: expected {} fields, found {}", data_row, header.size(), parts.size()));
        const auto date_text = trim(parts[date_field]);
        const auto date = parse_date(date_text);
        if (!date) throw DataError(fmt::format("row {}: unparseable date '{}'", data_row, date_text));
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto text = trim(parts[fields[c]]);
            if (is_missing_token(text)) {
                values[c] = kMissing;
                continue;
            }
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc{} || ptr != text.data() + text.size())
                throw DataError(
                    fmt::format("row {}: unparseable number '{}' in column '{}'", data_row, text, names[c]));
            values[c] = v;
        }
        builder.add_row(trim(parts[id_field]), *date, values);
    }
    return std::move(builder).build();
}

Panel load_panel(const std::filesystem::path& path, const PanelFormat& format) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open panel file '{}'", path.string()));
    PanelFormat fmt_copy = format;
    if (fmt_copy.delimiter == '\0') fmt_copy.delimiter = path.extension() == ".tsv" ? '\t' : ',';
    return read_panel(in, fmt_copy);
}

void write_panel(std::ostream& out, const Panel& panel, const std::vector<std::string>& columns, char delimiter) {
    const auto& names = columns.empty() ? panel.column_names() : columns;
    std::vector<std::span<const double>> data;
    for (const auto& n : names) data.push_back(panel.column(n));
    out << "id" << delimiter << "date";
    for (const auto& n : names) out << delimiter << n;
    out << '\n';
    const auto sec = panel.row_security();
    const auto dates = panel.row_dates();
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        out << panel.security_id(sec[r]) << delimiter << format_date(dates[r]);
        for (const auto& col : data) out << delimiter << format_double(col[r]);
        out << '\n';
    }
}

void write_panel(const std::filesystem::path& path, const Panel& panel, const std::vector<std::string>& columns,
                 char delimiter) {
    std::ofstream out(path);
    if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
    write_panel(out, panel, columns, delimiter);
}

} // namespace xsa
