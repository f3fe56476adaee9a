#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace usocost::csv {

// A header-bearing comma-delimited table. Lines starting with '#' before or
// between rows are comments. Fields may be double-quoted (RFC 4180).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column_index(std::string_view name) const;
};

Table read(std::istream& in);

// Quotes a field only when it contains a delimiter, quote or line break.
std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

std::string_view trim(std::string_view s);

// Locale-independent decimal parse of the whole (trimmed) string.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_integer(std::string_view s);

// Shortest representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace usocost::csv
