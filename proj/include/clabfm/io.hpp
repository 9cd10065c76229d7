#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace clabfm {

/// Shortest-safe round-trip text for a double (17 significant digits).
std::string format_double(double v);
/// Parses a full token as a double; throws ConfigError on trailing garbage.
double parse_double(std::string_view token);
std::vector<std::string> split_csv_line(std::string_view line);

/// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path &path, const std::string &text);

/// 64-bit FNV-1a, stable across platforms; used to tag outputs with a config hash.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

} // namespace clabfm
