#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wnscale {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Splits one CSV line on commas (no quoting; none of our fields need it).
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace wnscale
