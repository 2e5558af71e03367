#pragma once

#include <charconv>
#include <string>
#include <string_view>

namespace fcg {

/// Shortest decimal representation that parses back to the identical double.
inline std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

/// Parses a full string as a double. Returns false unless the whole
/// string is consumed.
inline bool parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

inline bool parse_long(std::string_view text, long long& out) {
    if (text.empty()) return false;
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

} // namespace fcg
