// SPDX-License-Identifier: Apache-2.0
#include "geopli/textio.hpp"

#include <charconv>
#include <system_error>

#include "geopli/errors.hpp"

namespace geopli {

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int precision) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
    double v = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        throw ParseError("not a number: '" + token + "'");
    }
    return v;
}

long long parse_int(const std::string& token) {
    long long v = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        throw ParseError("not an integer: '" + token + "'");
    }
    return v;
}

}  // namespace geopli
