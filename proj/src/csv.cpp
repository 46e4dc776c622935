#include "ofm/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ofm {

std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

int Csv::col(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

double Csv::num(size_t row, int c) const {
  if (c < 0 || row >= rows.size() || static_cast<size_t>(c) >= rows[row].size())
    throw std::out_of_range("Csv::num: bad cell reference");
  return std::strtod(rows[row][c].c_str(), nullptr);
}

long Csv::integer(size_t row, int c) const {
  if (c < 0 || row >= rows.size() || static_cast<size_t>(c) >= rows[row].size())
    throw std::out_of_range("Csv::integer: bad cell reference");
  return std::strtol(rows[row][c].c_str(), nullptr, 10);
}

static void write_row(std::ofstream& out, const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

void Csv::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);  // binary: no CRLF translation
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  write_row(out, header);
  for (const auto& r : rows) write_row(out, r);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Csv Csv::read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for read: " + path);
  Csv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (first) {
      csv.header = std::move(cells);
      first = false;
    } else {
      csv.rows.push_back(std::move(cells));
    }
  }
  return csv;
}

}  // namespace ofm
