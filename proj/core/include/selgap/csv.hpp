#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace selgap {

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_real(double value);

std::vector<std::string> split_csv_line(std::string_view line);

/// Writes through a temporary sibling file and renames it into place, so
/// readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);

std::string read_file(const std::filesystem::path& path);

}  // namespace selgap
