#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "reachlab/common.hpp"

namespace reachlab {

// Shortest round-trip decimal form; fixed formatting keeps replayed runs
// byte-identical.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns)
      : out_(path) {
    check(out_.good(), "csv: cannot open for write: " + path);
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
    width_ = columns.size();
  }

  void row(const std::vector<std::string>& cells) {
    check(cells.size() == width_, "csv: row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
  std::size_t width_ = 0;
};

}  // namespace reachlab
