#pragma once

// Small CSV helper for the project's tabular artifacts. Numbers are written
// with %.9g (9 significant digits) so files round-trip bit-stably through
// strtod and diff cleanly across runs.

#include <string>
#include <vector>

namespace ofm {

std::string format_g9(double v);

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // -1 when the column is absent
  int col(const std::string& name) const;
  bool has_col(const std::string& name) const { return col(name) >= 0; }

  double num(size_t row, int c) const;
  long integer(size_t row, int c) const;

  void write_file(const std::string& path) const;
  static Csv read_file(const std::string& path);
};

}  // namespace ofm
