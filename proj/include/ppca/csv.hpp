#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ppca/errors.hpp"
#include "ppca/types.hpp"

namespace ppca {

/// Shortest-width %.17g rendering; 17 significant digits round-trip
/// doubles exactly, keeping emitted files byte-stable.
inline std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline bool parse_uint_field(std::string_view field, std::int64_t& out) {
    if (field.empty() || field.size() > 18) return false;
    std::int64_t value = 0;
    for (char c : field) {
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

}  // namespace detail

inline constexpr std::string_view kLongCsvHeader = "obs,row,col,count";

/// Parses the long-format count CSV: header `obs,row,col,count`, LF
/// newlines, one dense cell per line. Dimensions are inferred as maximum
/// index + 1 and every cell must appear exactly once.
inline CountTensor ingest_long_csv(std::istream& in, const std::string& name = "<stream>") {
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (content.find('\r') != std::string::npos)
        throw parse_error(name + ": CR byte found; long CSV requires LF newlines");

    struct Record {
        std::int64_t obs, row, col, count;
    };
    std::vector<Record> records;
    std::int64_t max_obs = -1, max_row = -1, max_col = -1;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        const std::size_t eol = content.find('\n', pos);
        const bool last = eol == std::string::npos;
        std::string_view line(content.data() + pos, (last ? content.size() : eol) - pos);
        pos = last ? content.size() + 1 : eol + 1;
        ++line_no;
        if (line.empty()) {
            if (last) break;  // trailing newline
            throw parse_error(name + ": line " + std::to_string(line_no) + ": empty line");
        }
        if (line_no == 1) {
            if (line != kLongCsvHeader)
                throw parse_error(name + ": line 1: header must be exactly '" +
                                  std::string(kLongCsvHeader) + "'");
            continue;
        }
        Record rec{};
        std::int64_t* fields[4] = {&rec.obs, &rec.row, &rec.col, &rec.count};
        std::size_t start = 0;
        for (int f = 0; f < 4; ++f) {
            const std::size_t comma = line.find(',', start);
            const bool final_field = f == 3;
            if (final_field != (comma == std::string_view::npos))
                throw parse_error(name + ": line " + std::to_string(line_no) +
                                  ": expected 4 comma-separated fields");
            const std::string_view field =
                line.substr(start, final_field ? std::string_view::npos : comma - start);
            if (!detail::parse_uint_field(field, *fields[f]))
                throw parse_error(name + ": line " + std::to_string(line_no) +
                                  ": field '" + std::string(field) +
                                  "' is not a non-negative integer");
            start = comma + 1;
        }
        max_obs = std::max(max_obs, rec.obs);
        max_row = std::max(max_row, rec.row);
        max_col = std::max(max_col, rec.col);
        records.push_back(rec);
    }
    if (records.empty()) throw parse_error(name + ": no data rows");

    const std::size_t n = static_cast<std::size_t>(max_obs) + 1;
    const std::size_t p1 = static_cast<std::size_t>(max_row) + 1;
    const std::size_t p2 = static_cast<std::size_t>(max_col) + 1;
    // Dense contract: the inferred tensor can be no larger than the file
    // could possibly fill, so stray huge indices are caught before any
    // allocation.
    if (n > records.size() || p1 > records.size() || p2 > records.size())
        throw parse_error(name + ": indices imply a tensor larger than the file (" +
                          std::to_string(n) + " x " + std::to_string(p1) + " x " +
                          std::to_string(p2) + " from " + std::to_string(records.size()) +
                          " rows)");
    std::vector<std::int64_t> data(n * p1 * p2, 0);
    std::vector<std::uint8_t> seen(n * p1 * p2, 0);
    for (const auto& rec : records) {
        const std::size_t idx =
            (static_cast<std::size_t>(rec.obs) * p1 + static_cast<std::size_t>(rec.row)) * p2 +
            static_cast<std::size_t>(rec.col);
        if (seen[idx])
            throw parse_error(name + ": duplicate cell (obs=" + std::to_string(rec.obs) +
                              ", row=" + std::to_string(rec.row) +
                              ", col=" + std::to_string(rec.col) + ")");
        seen[idx] = 1;
        data[idx] = rec.count;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p1; ++j)
            for (std::size_t k = 0; k < p2; ++k) {
                const std::size_t idx = (i * p1 + j) * p2 + k;
                if (!seen[idx])
                    throw parse_error(name + ": missing cell (obs=" + std::to_string(i) +
                                      ", row=" + std::to_string(j) +
                                      ", col=" + std::to_string(k) + ")");
            }
    return CountTensor(n, p1, p2, std::move(data));
}

inline CountTensor ingest_long_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error(path + ": cannot open file");
    return ingest_long_csv(in, path);
}

/// Canonical emission: cells sorted by (obs, row, col), LF newlines.
/// emit(ingest(f)) is byte-identical for files already in this order.
inline void emit_long_csv(const CountTensor& x, std::ostream& out) {
    out << kLongCsvHeader << '\n';
    for (std::size_t i = 0; i < x.n(); ++i)
        for (std::size_t j = 0; j < x.p1(); ++j)
            for (std::size_t k = 0; k < x.p2(); ++k)
                out << i << ',' << j << ',' << k << ',' << x(i, j, k) << '\n';
}

inline void emit_long_csv_file(const CountTensor& x, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error(path + ": cannot open file for writing");
    emit_long_csv(x, out);
}

}  // namespace ppca
