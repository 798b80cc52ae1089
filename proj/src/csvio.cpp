#include "softfin/csvio.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace softfin::csv {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);  // binary: no platform newline surprises
  if (!os) throw std::runtime_error("csv: cannot open '" + path.string() + "' for write");
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  char buf[32];
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::logic_error("csv: row width " + std::to_string(row.size()) +
                             " != header width " + std::to_string(header.size()));
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
      os << (i ? "," : "") << buf;
    }
    os << "\n";
  }
  if (!os) throw std::runtime_error("csv: write failed for '" + path.string() + "'");
}

Table read(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("csv: cannot open '" + path.string() + "'");
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("csv: '" + path.string() + "' is empty");
  t.header = split_commas(line);

  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != t.header.size())
      throw std::runtime_error("csv: " + path.string() + ":" + std::to_string(lineno) + ": " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(t.header.size()));
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      char* end = nullptr;
      row[i] = std::strtod(cells[i].c_str(), &end);
      if (end == cells[i].c_str() || *end != '\0')
        throw std::runtime_error("csv: " + path.string() + ":" + std::to_string(lineno) +
                                 ": bad number '" + cells[i] + "' in column " + t.header[i]);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void require_header(const Table& t, const std::vector<std::string>& expected,
                    const std::string& context) {
  if (t.header != expected) {
    std::ostringstream os;
    os << context << ": ";
    const std::size_t n = std::min(t.header.size(), expected.size());
    std::size_t bad = n;
    for (std::size_t i = 0; i < n; ++i)
      if (t.header[i] != expected[i]) {
        bad = i;
        break;
      }
    if (bad < n)
      os << "expected column " << bad + 1 << " '" << expected[bad] << "', got '" << t.header[bad]
         << "'";
    else
      os << "expected " << expected.size() << " columns, got " << t.header.size();
    os << "; header must be [";
    for (std::size_t i = 0; i < expected.size(); ++i) os << (i ? "," : "") << expected[i];
    os << "]";
    throw std::runtime_error(os.str());
  }
}

}  // namespace softfin::csv
