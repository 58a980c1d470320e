#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace ebrm::csv {

/// Shortest round-trip decimal representation; the same bytes come out
/// for the same double on every run.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace ebrm::csv
