// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace geopli {

// Locale-independent double formatting via std::to_chars. Shortest form
// round-trips to the identical bit pattern, which the frame files rely on.
std::string format_double(double v);
std::string format_fixed(double v, int precision);

// Strict full-token parses; throw ParseError on anything left over.
double parse_double(const std::string& token);
long long parse_int(const std::string& token);

}  // namespace geopli
