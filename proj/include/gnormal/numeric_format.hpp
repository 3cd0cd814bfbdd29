#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace gnormal {

/// Shortest decimal string that round-trips to the same double.
inline std::string shortest(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    if (res.ec != std::errc{}) return "nan";
    return std::string(buf, res.ptr);
}

}  // namespace gnormal
