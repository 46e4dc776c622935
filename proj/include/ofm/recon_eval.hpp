#pragma once

// Direct Fourier-slice reconstruction from oriented images, shell
// correlation between volumes, threshold resolution readout, angular-error
// statistics under a symmetry group, and the uncertainty/error rank
// correlation report.

#include <array>
#include <optional>
#include <vector>

#include "ofm/csv.hpp"
#include "ofm/orient_table.hpp"
#include "ofm/simulator.hpp"
#include "ofm/so3.hpp"
#include "ofm/uncertainty.hpp"

namespace ofm {

// Per-shell correlation between the Fourier transforms of two volumes.
// radius[s] = s / side cycles per pixel, strictly increasing up to 0.5.
struct FscCurve {
  std::vector<double> radius;
  std::vector<double> corr;
};

struct ResolutionResult {
  double angstrom = 0.0;
  bool at_limit = false;  // curve never dropped below the threshold
};

// Un-shifts each image, inserts its 2D spectrum as the central slice
// oriented by R(q) into a 3D Fourier grid (sample k of image i lands at
// R(q_i)^T * (kx, ky, 0)) with trilinear gridding, divides accumulated
// values by accumulated weights (voxels below the 1e-6 weight floor count
// as uncovered), and inverse transforms. Normalization makes the result
// invariant to duplicating the image set. All images must share one side
// and pixel size.
Volume reconstruct(const std::vector<Image>& images, const std::vector<Quat>& quats,
                   const std::vector<std::array<double, 2>>& shifts);
Volume reconstruct(const std::vector<Image>& images, const OrientTable& table);

FscCurve fsc(const Volume& v1, const Volume& v2);

void write_fsc_csv(const std::string& path, const FscCurve& curve);
FscCurve read_fsc_csv(const std::string& path);

// First crossing below the threshold, linearly interpolated between shells,
// reported as pixel_size / (cycles per pixel at the crossing). A curve that
// never crosses reads as the sampling limit 2 * pixel_size with the flag set.
ResolutionResult resolution_at(const FscCurve& curve, double pixel_size,
                               double threshold = 0.143);

// Median over the set of symmetric_distance(pred, truth, group).
double median_angular_error(const std::vector<Quat>& preds, const std::vector<Quat>& truths,
                            const SymmetryGroup& group);

// Spearman rank correlation with average ranks for ties; absent when either
// side is constant (rank variance zero).
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);

struct UncertaintyReport {
  std::optional<double> spearman_lambda_max;
  std::optional<double> spearman_trace;
  Csv scatter;  // error,lambda_max,trace_stat,error_quantile
};

// Rank correlations between per-image angular errors and both dispersion
// statistics, plus the scatter table for external plotting. Requires at
// least 10 entries. error_quantile is the error's average rank mapped to
// [0, 1].
UncertaintyReport uncertainty_report(const std::vector<double>& errors,
                                     const std::vector<DispersionStats>& stats);

}  // namespace ofm
