#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace etas::csv {

/// Shortest decimal representation that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

[[nodiscard]] std::optional<double> parse_double(std::string_view text);

/// Splits on commas and trims surrounding whitespace from each field. No
/// quoting support; catalog and chain files never need it.
[[nodiscard]] std::vector<std::string_view> split_fields(std::string_view line);

[[nodiscard]] std::string_view trim(std::string_view text);

}  // namespace etas::csv
