#pragma once

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace fluxzz {

/// Locale-independent %.17g formatting; round-trips every double.
inline std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return {buf, res.ptr};
}

inline double parse_real(std::string_view s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    const char *first = s.data();
    if (!s.empty() && s.front() == '+') ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not a real number: '" + std::string(s) + "'");
    return v;
}

}  // namespace fluxzz
