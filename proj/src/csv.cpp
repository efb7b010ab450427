#include "gpphs/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gpphs/errors.hpp"

namespace gpphs {

std::string CsvTable::comment_value(const std::string& key) const {
  const std::string prefix = key + "=";
  for (const std::string& c : comments)
    if (c.rfind(prefix, 0) == 0) return c.substr(prefix.size());
  return "";
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  for (const std::string& c : table.comments) out << "# " << c << "\n";
  for (std::size_t j = 0; j < table.header.size(); ++j)
    out << (j ? "," : "") << table.header[j];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j)
      out << (j ? "," : "") << format_double(row[j]);
    out << "\n";
  }
  if (!out) throw Error("write failed: " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  CsvTable table;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t start = line.find_first_not_of(" \t", 1);
      table.comments.push_back(start == std::string::npos ? "" : line.substr(start));
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    if (!header_seen) {
      while (std::getline(ss, cell, ',')) table.header.push_back(cell);
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(table.header.size());
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != table.header.size())
      throw Error("row width mismatch in " + path);
    table.rows.push_back(std::move(row));
  }
  if (!header_seen) throw Error("no header row in " + path);
  return table;
}

}  // namespace gpphs
