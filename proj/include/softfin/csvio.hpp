#pragma once

// strict csv i/o for numeric tables: one header line, comma separators,
// doubles written round-trip exact. readers fail loudly with file and line
// context instead of guessing.

#include <filesystem>
#include <string>
#include <vector>

namespace softfin::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows);

Table read(const std::filesystem::path& path);

// throws unless the table's header is exactly `expected`
void require_header(const Table& t, const std::vector<std::string>& expected,
                    const std::string& context);

}  // namespace softfin::csv
