#pragma once

// Orientation tables tie image stacks to poses. Base columns are
// index,qw,qx,qy,qz,shift_x,shift_y; the simulator appends defocus and
// snr_target, inference with a dispersion-aware head appends
// lambda_max,trace_stat,degenerate. Values are written with 9 significant
// digits.

#include <optional>
#include <string>
#include <vector>

#include "ofm/so3.hpp"

namespace ofm {

struct OrientRecord {
  long index = 0;
  Quat q;
  double shift_x = 0.0, shift_y = 0.0;
  std::optional<double> defocus;     // angstroms
  std::optional<double> snr_target;
  std::optional<double> lambda_max;  // dispersion stats, see uncertainty.hpp
  std::optional<double> trace_stat;
  std::optional<bool> degenerate;
};

struct OrientTable {
  std::vector<OrientRecord> records;

  bool has_sim_columns() const;
  bool has_uncertainty_columns() const;

  void write_csv(const std::string& path) const;
  static OrientTable read_csv(const std::string& path);
};

}  // namespace ofm
