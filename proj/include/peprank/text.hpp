// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace peprank::text {

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
std::string join_doubles(const std::vector<double>& values, char sep = ',');

/// Whole-string parses; throw ParseError naming `what` on failure.
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

}  // namespace peprank::text
