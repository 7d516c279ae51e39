#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace haad {

/// Shortest decimal form that parses back to the same double.
inline std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) return "nan";
    return std::string(buf, res.ptr);
}

}  // namespace haad
