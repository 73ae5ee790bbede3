#pragma once

#include "fieldqubit/error.hpp"
#include "fieldqubit/noise/decay_curve.hpp"
#include "fieldqubit/numerics/psd.hpp"

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace fieldqubit::io {

/// Shortest decimal that round-trips, '.' separator, no locale.
inline std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

inline double parse_number(std::string_view s, const std::string& where) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
        fail(ErrorKind::invalid_input, where + ": not a number: '" + std::string(s) + "'");
    return v;
}

/// Comma-separated table with a mandatory header row. No quoting: cells
/// may not contain commas or newlines.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string source = "csv";

    std::size_t column_index(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        fail(ErrorKind::invalid_input, source + ": missing column '" + std::string(name) + "'");
    }

    bool has_column(std::string_view name) const {
        for (const auto& h : header)
            if (h == name) return true;
        return false;
    }

    std::vector<double> numbers(std::string_view name) const {
        const std::size_t c = column_index(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r)
            out.push_back(parse_number(rows[r][c], source + " row " + std::to_string(r + 2)));
        return out;
    }

    std::vector<std::string> strings(std::string_view name) const {
        const std::size_t c = column_index(name);
        std::vector<std::string> out;
        for (const auto& row : rows) out.push_back(row[c]);
        return out;
    }
};

inline std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
        cells.emplace_back(cell);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

inline CsvTable parse_csv(std::string_view text, std::string source = "csv") {
    CsvTable t;
    t.source = std::move(source);
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        auto cells = split_line(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            fail(ErrorKind::invalid_input, t.source + " line " + std::to_string(line_no) + ": expected " +
                                               std::to_string(t.header.size()) + " fields");
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) fail(ErrorKind::invalid_input, t.source + ": missing header row");
    return t;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::invalid_input, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path), path.string()); }

/// Numeric table as CSV text with LF line endings.
inline std::string format_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& columns) {
    require(header.size() == columns.size(), "format_csv: header and column count differ");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns) require(c.size() == rows, "format_csv: ragged columns");
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) out += ',';
            out += format_number(columns[c][r]);
        }
        out += '\n';
    }
    return out;
}

inline void write_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::invalid_input, "cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(ErrorKind::invalid_input, "write failed for '" + path.string() + "'");
}

/// `t_s,population[,weight]`; extra columns are ignored.
inline noise::DecayCurve decay_curve_from_table(const CsvTable& t) {
    noise::DecayCurve c;
    c.times = t.numbers("t_s");
    c.populations = t.numbers("population");
    if (t.has_column("weight")) c.weights = t.numbers("weight");
    c.validate();
    return c;
}

inline noise::DecayCurve read_decay_curve(const std::filesystem::path& path) {
    return decay_curve_from_table(read_csv(path));
}

inline std::string format_decay_curve(const noise::DecayCurve& c) {
    if (c.weights.empty()) return format_csv({"t_s", "population"}, {c.times, c.populations});
    return format_csv({"t_s", "population", "weight"}, {c.times, c.populations, c.weights});
}

inline std::string format_spectrum(const numerics::Spectrum& s) {
    return format_csv({"freq_hz", "psd"}, {s.frequencies, s.values});
}

} // namespace fieldqubit::io
