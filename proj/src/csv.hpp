#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dropsurv::csv {

struct Row {
  std::size_t line = 0;  // 1-based physical line where the row starts
  std::vector<std::string> cells;
};

/// RFC 4180 style: comma separated, optional double quotes with "" escapes,
/// LF or CRLF line endings. Blank lines are skipped.
std::vector<Row> parse(std::string_view text);

/// Quotes a cell only when it contains a comma, quote, or line break.
std::string escape(std::string_view cell);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

std::string read_file(const std::string& path);

}  // namespace dropsurv::csv
