#include "ofm/orient_table.hpp"

#include <stdexcept>

#include "ofm/csv.hpp"

namespace ofm {

bool OrientTable::has_sim_columns() const {
  return !records.empty() && records.front().defocus.has_value();
}

bool OrientTable::has_uncertainty_columns() const {
  return !records.empty() && records.front().lambda_max.has_value();
}

void OrientTable::write_csv(const std::string& path) const {
  Csv csv;
  csv.header = {"index", "qw", "qx", "qy", "qz", "shift_x", "shift_y"};
  const bool sim = has_sim_columns();
  const bool unc = has_uncertainty_columns();
  if (sim) {
    csv.header.push_back("defocus");
    csv.header.push_back("snr_target");
  }
  if (unc) {
    csv.header.push_back("lambda_max");
    csv.header.push_back("trace_stat");
    csv.header.push_back("degenerate");
  }
  for (const auto& r : records) {
    std::vector<std::string> row = {std::to_string(r.index), format_g9(r.q.w),
                                    format_g9(r.q.x),        format_g9(r.q.y),
                                    format_g9(r.q.z),        format_g9(r.shift_x),
                                    format_g9(r.shift_y)};
    if (sim) {
      row.push_back(format_g9(r.defocus.value()));
      row.push_back(format_g9(r.snr_target.value()));
    }
    if (unc) {
      row.push_back(format_g9(r.lambda_max.value()));
      row.push_back(format_g9(r.trace_stat.value()));
      row.push_back(r.degenerate.value_or(false) ? "1" : "0");
    }
    csv.rows.push_back(std::move(row));
  }
  csv.write_file(path);
}

OrientTable OrientTable::read_csv(const std::string& path) {
  Csv csv = Csv::read_file(path);
  for (const char* c : {"index", "qw", "qx", "qy", "qz", "shift_x", "shift_y"})
    if (!csv.has_col(c))
      throw std::runtime_error("orientation table " + path + " lacks column " + c);
  const int ci = csv.col("index"), cw = csv.col("qw"), cx = csv.col("qx"),
            cy = csv.col("qy"), cz = csv.col("qz"), csx = csv.col("shift_x"),
            csy = csv.col("shift_y");
  const int cd = csv.col("defocus"), cs = csv.col("snr_target");
  const int cl = csv.col("lambda_max"), ct = csv.col("trace_stat"),
            cg = csv.col("degenerate");
  OrientTable t;
  t.records.reserve(csv.rows.size());
  for (size_t i = 0; i < csv.rows.size(); ++i) {
    OrientRecord r;
    r.index = csv.integer(i, ci);
    r.q = Quat{csv.num(i, cw), csv.num(i, cx), csv.num(i, cy), csv.num(i, cz)};
    r.shift_x = csv.num(i, csx);
    r.shift_y = csv.num(i, csy);
    if (cd >= 0) r.defocus = csv.num(i, cd);
    if (cs >= 0) r.snr_target = csv.num(i, cs);
    if (cl >= 0) r.lambda_max = csv.num(i, cl);
    if (ct >= 0) r.trace_stat = csv.num(i, ct);
    if (cg >= 0) r.degenerate = csv.integer(i, cg) != 0;
    t.records.push_back(r);
  }
  return t;
}

}  // namespace ofm
