#pragma once

#include <string>
#include <string_view>

namespace sqz::cli {

/// Parses a number with an optional SI prefix and unit, e.g. "5.12mW",
/// "66MHz", "19mrad", "77mm", "3e-3". `unit` is the base unit the suffix must
/// end with ("" for dimensionless). Throws std::invalid_argument.
double parse_quantity(std::string_view text, std::string_view unit);

/// Noise floor relative to shot noise: "-22dB" or a linear ratio.
double parse_ratio_or_db(std::string_view text);

/// Shortest representation that round-trips through strtod.
std::string format_number(double value);

}  // namespace sqz::cli
