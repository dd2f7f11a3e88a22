#pragma once

#include <string>
#include <string_view>

namespace klgeo {

/// Locale-independent decimal with 17 significant digits; "inf"/"-inf"/"nan"
/// for non-finite values.
std::string format_double(double value);

/// Inverse of format_double. Accepts "inf". Throws std::invalid_argument.
double parse_double(std::string_view text);

}  // namespace klgeo
