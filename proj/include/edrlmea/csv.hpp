#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace edrlmea::csv {

// Minimal strict CSV: comma-separated, no quoting or escaping. The file
// formats this project defines never need quoted fields.
std::vector<std::string> split_line(const std::string& line);
std::vector<std::vector<std::string>> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                const std::vector<std::vector<std::string>>& rows);

// shortest round-trip decimal rendering (stable across runs)
std::string format_double(double v);
double parse_double(const std::string& cell, const std::string& context);

}  // namespace edrlmea::csv
