#include "psmooth/csv.hpp"

#include <cstdio>

#include "psmooth/errors.hpp"

namespace psmooth {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path) {
  require(out_.good(), ErrorKind::ConfigInvalid, "cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values, std::size_t blank_tail) {
  for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_double(values[i]);
  for (std::size_t i = 0; i < blank_tail; ++i) out_ << ',';
  out_ << '\n';
}

}  // namespace psmooth
