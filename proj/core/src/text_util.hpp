#pragma once

// Internal text helpers shared by the CSV/config writers. Doubles are
// printed with shortest-round-trip formatting so parsing a file back
// reproduces the exact bit pattern.

#include <charconv>
#include <cstdlib>
#include <string>
#include <vector>

#include "feddlora/errors.hpp"

namespace feddlora::detail {

inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline double parse_double(const std::string& s, const std::string& context) {
    const std::string t = trim(s);
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0')
        throw IoError("cannot parse number '" + t + "' in " + context);
    return v;
}

inline long long parse_int(const std::string& s, const std::string& context) {
    const std::string t = trim(s);
    char* end = nullptr;
    long long v = std::strtoll(t.c_str(), &end, 10);
    if (end == t.c_str() || *end != '\0')
        throw IoError("cannot parse integer '" + t + "' in " + context);
    return v;
}

}  // namespace feddlora::detail
