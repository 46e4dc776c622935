#pragma once

// Dispersion statistics read off the spectrum of the 4x4 head matrix, plus
// the quantile filter that drops the least-confident predictions. The stats
// depend only on eigenvalue gaps, so they are invariant to adding c*I.

#include <vector>

#include "ofm/rep_heads.hpp"

namespace ofm {

struct DispersionStats {
  // Concentration parameters, all <= 0; more negative means more peaked.
  // With the spectrum of A ascending as a1 <= a2 <= a3 <= a4:
  //   lambda1 = a1 - a4, lambda2 = a1 - a3, lambda3 = a1 - a2.
  double lambda1 = 0, lambda2 = 0, lambda3 = 0;
  double lambda_max = 0;   // = lambda3, the least-negative axis
  double trace_stat = 0;   // lambda1 + lambda2 + lambda3
  bool degenerate = false; // bottom eigenvalue gap below 1e-9
};

DispersionStats dispersion_from_spectrum(const std::array<double, 4>& ascending);

// Eigendecomposes a and derives the stats. Throws DegenerateInput when a is
// materially non-PSD (bottom eigenvalue below -1e-6 * scale).
DispersionStats dispersion_stats(const Mat4& a);

// Keep mask for the floor(keep_fraction * N) entries with the lowest stat
// (lowest = most concentrated = most trustworthy). Ties break toward lower
// index; degenerate entries rank after every finite one. keep_fraction must
// lie in (0, 1].
std::vector<bool> quantile_keep_mask(const std::vector<double>& stat,
                                     const std::vector<bool>& degenerate,
                                     double keep_fraction);

}  // namespace ofm
