#pragma once

// Internal helpers for the text file formats.

#include <charconv>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mvmocap::detail {

// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int decimals);

double parse_double(std::string_view s, std::string_view context);
long parse_long(std::string_view s, std::string_view context);

std::vector<std::string_view> split(std::string_view s, char delim);
std::string_view trim(std::string_view s);

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary file and rename so readers never see partial output.
void write_file(const std::filesystem::path& path, const std::string& contents);

// Bundled data files: $MVMOCAP_DATA_DIR, else the build-time location.
std::filesystem::path data_directory();

}  // namespace mvmocap::detail
