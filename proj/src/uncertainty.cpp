#include "ofm/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ofm {

DispersionStats dispersion_from_spectrum(const std::array<double, 4>& a) {
  DispersionStats s;
  s.lambda1 = a[0] - a[3];
  s.lambda2 = a[0] - a[2];
  s.lambda3 = a[0] - a[1];
  s.lambda_max = s.lambda3;
  s.trace_stat = s.lambda1 + s.lambda2 + s.lambda3;
  s.degenerate = a[1] - a[0] < 1e-9;
  return s;
}

DispersionStats dispersion_stats(const Mat4& a) {
  SymEig4 e = eig_sym4(a);
  double scale = std::max(1.0, std::abs(e.values[3]));
  if (e.values[0] < -1e-6 * scale)
    throw DegenerateInput("dispersion_stats: matrix is not positive semidefinite");
  return dispersion_from_spectrum(e.values);
}

std::vector<bool> quantile_keep_mask(const std::vector<double>& stat,
                                     const std::vector<bool>& degenerate,
                                     double keep_fraction) {
  require(keep_fraction > 0.0 && keep_fraction <= 1.0,
          "quantile_keep_mask: keep_fraction must be in (0, 1]");
  require(stat.size() == degenerate.size(),
          "quantile_keep_mask: stat/degenerate size mismatch");
  const size_t n = stat.size();
  size_t keep = static_cast<size_t>(std::floor(keep_fraction * static_cast<double>(n) + 1e-9));
  keep = std::min(keep, n);

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t i, size_t j) {
    if (degenerate[i] != degenerate[j]) return degenerate[j];  // finite first
    if (stat[i] != stat[j]) return stat[i] < stat[j];
    return i < j;
  });
  std::vector<bool> mask(n, false);
  for (size_t k = 0; k < keep; ++k) mask[order[k]] = true;
  return mask;
}

}  // namespace ofm
