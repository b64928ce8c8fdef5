#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace motorprim {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Writes one comma-separated row.
void write_row(std::ostream& out, const std::vector<double>& values);

/// Reads a CSV with a single header line into columns by name. Lines
/// starting with '#' are returned in `comments` (without the '#').
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  ///< -1 if absent
  std::vector<double> col(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace motorprim
