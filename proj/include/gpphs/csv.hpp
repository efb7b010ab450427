#pragma once

#include <string>
#include <vector>

#include "gpphs/types.hpp"

namespace gpphs {

// Minimal CSV table: header row plus numeric rows, all doubles. Leading
// lines starting with '#' carry key=value metadata (e.g. config_digest)
// and survive a round trip.
struct CsvTable {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string comment_value(const std::string& key) const;  // "" if absent
};

// Doubles are written with 17 significant digits so a read-back is
// bit-exact.
std::string format_double(double v);

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

}  // namespace gpphs
