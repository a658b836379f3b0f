#pragma once
// Small strict text helpers shared by the file formats.

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>

namespace eevdag {

// Shortest decimal string that round-trips the double exactly.
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// Whole-token numeric parses; trailing junk is an error, unlike atoi/strtod.
inline long long parse_int_token(std::string_view tok, const std::string& where) {
    long long value = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw std::invalid_argument(where + ": expected an integer, got '" + std::string(tok) + "'");
    return value;
}

inline double parse_double_token(std::string_view tok, const std::string& where) {
    double value = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw std::invalid_argument(where + ": expected a number, got '" + std::string(tok) + "'");
    return value;
}

}  // namespace eevdag
