#pragma once

#include "errors.hpp"

#include <charconv>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace hle::csv {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

/// Parsed comma-separated table: a header row plus data rows with line numbers.
/// Blank lines and lines starting with '#' are skipped.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        return std::nullopt;
    }
};

inline Table read(std::istream &in) {
    Table t;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') {
            continue;
        }
        auto fields = split(body);
        if (t.header.empty()) {
            // Tolerate a UTF-8 byte order mark on the header.
            if (fields[0].rfind("\xEF\xBB\xBF", 0) == 0) {
                fields[0].erase(0, 3);
            }
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw ValidationError("line " + std::to_string(number) + ": expected " +
                                  std::to_string(t.header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(number);
    }
    if (t.header.empty()) {
        throw ValidationError("empty CSV input");
    }
    return t;
}

inline double to_double(std::string_view text, std::size_t line) {
    double v = 0.0;
    const auto *end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ValidationError("line " + std::to_string(line) + ": '" + std::string(text) +
                              "' is not a number");
    }
    return v;
}

inline int to_int(std::string_view text, std::size_t line) {
    int v = 0;
    const auto *end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ValidationError("line " + std::to_string(line) + ": '" + std::string(text) +
                              "' is not an integer");
    }
    return v;
}

/// Shortest text that reads back to the same double.
inline std::string format(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace hle::csv
