#pragma once

#include "gensyn/errors.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace gensyn::csv {

inline std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

/// Reads a CSV file into rows of trimmed fields. Blank lines are skipped.
inline std::vector<std::vector<std::string>> read_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(split(line));
    }
    return rows;
}

/// Shortest round-trip decimal representation of a double.
inline std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

inline double parse_double(const std::string &s, const std::string &what) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("cannot parse number '" + s + "' in " + what);
    return v;
}

/// Counts are nonnegative decimals everywhere in the input formats.
inline double parse_count(const std::string &s, const std::string &what) {
    double v = parse_double(s, what);
    if (v < 0) throw ConfigError("negative count '" + s + "' in " + what);
    return v;
}

inline long long parse_int(const std::string &s, const std::string &what) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("cannot parse integer '" + s + "' in " + what);
    return v;
}

class Writer {
  public:
    explicit Writer(const std::string &path) : out_(path) {
        if (!out_) throw ConfigError("cannot open for writing: " + path);
    }
    void row(const std::vector<std::string> &fields) {
        for (size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }
    std::ofstream &stream() { return out_; }

  private:
    std::ofstream out_;
};

} // namespace gensyn::csv
