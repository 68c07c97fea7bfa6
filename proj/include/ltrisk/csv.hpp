#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ltrisk::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header field; throws DataError when absent.
  std::size_t column(std::string_view name) const;
};

/// Plain comma-separated reader: no quoting, trims trailing CR. Rows with a
/// field count different from the header are a DataError.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

std::vector<std::string> split(std::string_view line);
std::string join(const std::vector<std::string>& fields);

/// Shortest round-trip representation of a double.
std::string format_double(double v);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace ltrisk::csv
