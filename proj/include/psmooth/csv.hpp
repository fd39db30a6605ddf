#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace psmooth {

// 17 significant digits, enough to round-trip.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values, std::size_t blank_tail = 0);

 private:
  std::ofstream out_;
};

}  // namespace psmooth
