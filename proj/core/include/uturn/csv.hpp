#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace uturn {

/// Minimal comma-separated table: no quoting, `#` comment lines skipped.
struct CsvTable {
  std::vector<std::string> header;
  struct Row {
    std::size_t line = 0;  // 1-based source line
    std::vector<std::string> fields;
  };
  std::vector<Row> rows;
  /// `key=value` pairs from leading `# key=value` comment lines.
  std::map<std::string, std::string> metadata;

  /// Column index of `name`, if present.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// Parses CSV text. With `has_header`, the first non-comment line is the
/// header. Throws ParseError on rows whose width differs from the first row.
CsvTable read_csv(std::string_view text, bool has_header = true);

std::string_view trim(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

/// Strict double parse of the whole field; throws ParseError otherwise.
double parse_double(std::string_view field, std::size_t line = 0);

long parse_long(std::string_view field, std::size_t line = 0);

/// Shortest "%.17g" rendering; round-trips exactly through parse_double.
std::string format_double(double v);

/// Fixed-point rendering with `decimals` digits, for rounded report tables.
std::string format_fixed(double v, int decimals);

/// Flat `key=value` configuration text (`#` comments, blank lines ignored).
std::map<std::string, std::string> parse_key_values(std::string_view text);

std::string serialize_key_values(const std::map<std::string, std::string>& kv);

}  // namespace uturn
