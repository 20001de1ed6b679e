#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace auscult::csv {

// Minimal CSV: comma-separated, no quoting (no field we emit contains a
// comma), trailing \r tolerated.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_line(const std::string& line);
std::string join_line(const std::vector<std::string>& fields);
Table read_file(const std::filesystem::path& path);

}  // namespace auscult::csv
