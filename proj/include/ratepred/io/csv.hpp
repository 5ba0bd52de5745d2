#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ratepred::io {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Strict parse of a whole field; throws std::invalid_argument otherwise.
double parse_double(std::string_view field);
long long parse_int(std::string_view field);

/// Splits on commas. Fields never contain quotes or commas in our files.
std::vector<std::string_view> split_fields(std::string_view line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws when absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& file);

/// Writes `content` to `file` through a temporary sibling and a rename, so a
/// crash never leaves a half-written file behind.
void write_file_atomic(const std::filesystem::path& file, const std::string& content);

std::string read_file(const std::filesystem::path& file);

}  // namespace ratepred::io
