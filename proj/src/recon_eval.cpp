#include "ofm/recon_eval.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>

#include "ofm/common.hpp"
#include "ofm/fft.hpp"

namespace ofm {
namespace {

inline int wrap_index(int t, int n) { return ((t % n) + n) % n; }

// Accumulates one image into the (values, weights) grids. spec is scratch of
// size n*n. The image spectrum is rephased so that sample k carries the
// transform of the centered, un-shifted projection; the grid then holds the
// centered transform of the volume and a final per-voxel sign flip converts
// back to index-0-origin DFT layout (n is even, so the center shift is
// exactly a checkerboard).
void insert_slice(const Image& img, const Quat& q, double shift_x, double shift_y,
                  const Fft2D& fft2, std::complex<double>* spec,
                  std::vector<std::complex<double>>& values, std::vector<double>& weights) {
  const int n = img.side;
  const double c = n / 2;
  for (int i = 0; i < n * n; ++i) spec[i] = img.pixels[i];
  fft2.forward(spec);

  const Mat3 m = quat_to_rotmat(q);
  const double sx = shift_x + c, sy = shift_y + c;
  const double nyq2 = (n / 2.0) * (n / 2.0) * (1.0 + 1e-12);
  for (int ky = 0; ky < n; ++ky) {
    const int fy = freq_index(ky, n);
    for (int kx = 0; kx < n; ++kx) {
      const int fx = freq_index(kx, n);
      if (fx * fx + fy * fy > nyq2) continue;  // outside the resolved disc
      const double phase = 2.0 * kPi * (fx * sx + fy * sy) / n;
      const std::complex<double> val =
          spec[static_cast<size_t>(ky) * n + kx] * std::polar(1.0, phase);
      // slice point R^T * (fx, fy, 0) with row-major m
      const double px = m[0] * fx + m[3] * fy;
      const double py = m[1] * fx + m[4] * fy;
      const double pz = m[2] * fx + m[5] * fy;
      const int bx = static_cast<int>(std::floor(px));
      const int by = static_cast<int>(std::floor(py));
      const int bz = static_cast<int>(std::floor(pz));
      const double tx = px - bx, ty = py - by, tz = pz - bz;
      for (int dz = 0; dz < 2; ++dz) {
        const double wz = dz ? tz : 1.0 - tz;
        if (wz == 0.0) continue;
        const int iz = wrap_index(bz + dz, n);
        for (int dy = 0; dy < 2; ++dy) {
          const double wy = dy ? ty : 1.0 - ty;
          if (wy == 0.0) continue;
          const int iy = wrap_index(by + dy, n);
          for (int dx = 0; dx < 2; ++dx) {
            const double w = wz * wy * (dx ? tx : 1.0 - tx);
            if (w == 0.0) continue;
            const int ix = wrap_index(bx + dx, n);
            const size_t idx = (static_cast<size_t>(iz) * n + iy) * n + ix;
            values[idx] += w * val;
            weights[idx] += w;
          }
        }
      }
    }
  }
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * (i + j) + 1.0;  // 1-based average rank of the tie run
    for (size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

Volume reconstruct(const std::vector<Image>& images, const std::vector<Quat>& quats,
                   const std::vector<std::array<double, 2>>& shifts) {
  require(!images.empty(), "reconstruct: empty image set");
  require(quats.size() == images.size() && shifts.size() == images.size(),
          "reconstruct: images, quats, shifts must have equal lengths");
  const int n = images[0].side;
  require(n >= 2 && n % 2 == 0, "reconstruct: image side must be even and >= 2");
  for (const Image& img : images)
    require(img.side == n, "reconstruct: images must share one side");

  const size_t voxels = static_cast<size_t>(n) * n * n;
  std::vector<std::complex<double>> values(voxels, 0.0);
  std::vector<double> weights(voxels, 0.0);
  Fft2D fft2(n);

  // Fixed-size blocks accumulated privately and reduced in block order keep
  // every floating-point sum order independent of the thread count.
  const long count = static_cast<long>(images.size());
  const long block = 32;
  const long n_blocks = (count + block - 1) / block;
#pragma omp parallel for ordered schedule(dynamic, 1)
  for (long b = 0; b < n_blocks; ++b) {
    std::vector<std::complex<double>> lv(voxels, 0.0);
    std::vector<double> lw(voxels, 0.0);
    std::vector<std::complex<double>> spec(static_cast<size_t>(n) * n);
    const long lo = b * block, hi = std::min(count, lo + block);
    for (long i = lo; i < hi; ++i)
      insert_slice(images[i], quats[i], shifts[i][0], shifts[i][1], fft2, spec.data(), lv, lw);
#pragma omp ordered
    {
      for (size_t v = 0; v < voxels; ++v) {
        values[v] += lv[v];
        weights[v] += lw[v];
      }
    }
  }

  std::vector<std::complex<double>> grid(voxels);
  size_t idx = 0;
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix, ++idx) {
        // voxels whose accumulated weight sits below the floor count as
        // uncovered; dividing them by the floor instead would leave ghost
        // amplitudes that scale with the image count
        if (weights[idx] < 1e-6) continue;
        const double sign = ((ix + iy + iz) & 1) ? -1.0 : 1.0;
        grid[idx] = sign * values[idx] / weights[idx];
      }
  Fft3D fft3(n);
  fft3.inverse(grid.data());

  Volume out;
  out.side = n;
  out.pixel_size = images[0].pixel_size;
  out.data.resize(voxels);
  for (size_t v = 0; v < voxels; ++v) out.data[v] = grid[v].real();
  return out;
}

Volume reconstruct(const std::vector<Image>& images, const OrientTable& table) {
  std::vector<Quat> quats;
  std::vector<std::array<double, 2>> shifts;
  quats.reserve(table.records.size());
  shifts.reserve(table.records.size());
  for (const OrientRecord& r : table.records) {
    quats.push_back(r.q);
    shifts.push_back({r.shift_x, r.shift_y});
  }
  return reconstruct(images, quats, shifts);
}

FscCurve fsc(const Volume& v1, const Volume& v2) {
  require(v1.side == v2.side, "fsc: volume dimensions must match");
  const int n = v1.side;
  require(n >= 2, "fsc: empty volume");
  const size_t voxels = static_cast<size_t>(n) * n * n;
  require(v1.data.size() == voxels && v2.data.size() == voxels,
          "fsc: volume data size mismatch");

  std::vector<std::complex<double>> a(voxels), b(voxels);
  for (size_t i = 0; i < voxels; ++i) {
    a[i] = v1.data[i];
    b[i] = v2.data[i];
  }
  Fft3D fft3(n);
  fft3.forward(a.data());
  fft3.forward(b.data());

  const int n_shells = n / 2 + 1;
  std::vector<double> cross(n_shells, 0.0), pa(n_shells, 0.0), pb(n_shells, 0.0);
  size_t idx = 0;
  for (int kz = 0; kz < n; ++kz) {
    const double fz = freq_index(kz, n);
    for (int ky = 0; ky < n; ++ky) {
      const double fy = freq_index(ky, n);
      for (int kx = 0; kx < n; ++kx, ++idx) {
        const double fx = freq_index(kx, n);
        const int s = static_cast<int>(std::lround(std::sqrt(fx * fx + fy * fy + fz * fz)));
        if (s >= n_shells) continue;  // cube corners beyond Nyquist
        cross[s] += a[idx].real() * b[idx].real() + a[idx].imag() * b[idx].imag();
        pa[s] += std::norm(a[idx]);
        pb[s] += std::norm(b[idx]);
      }
    }
  }

  FscCurve curve;
  curve.radius.resize(n_shells);
  curve.corr.resize(n_shells);
  for (int s = 0; s < n_shells; ++s) {
    curve.radius[s] = static_cast<double>(s) / n;
    const double denom = std::sqrt(pa[s] * pb[s]);
    curve.corr[s] = denom > 0.0 ? cross[s] / denom : 0.0;
  }
  return curve;
}

void write_fsc_csv(const std::string& path, const FscCurve& curve) {
  Csv csv;
  csv.header = {"shell", "radius", "corr"};
  for (size_t s = 0; s < curve.radius.size(); ++s)
    csv.rows.push_back({std::to_string(s), format_g9(curve.radius[s]), format_g9(curve.corr[s])});
  csv.write_file(path);
}

FscCurve read_fsc_csv(const std::string& path) {
  const Csv csv = Csv::read_file(path);
  const int cr = csv.col("radius"), cc = csv.col("corr");
  require(cr >= 0 && cc >= 0, "fsc csv: missing radius/corr column");
  FscCurve curve;
  for (size_t i = 0; i < csv.rows.size(); ++i) {
    curve.radius.push_back(csv.num(i, cr));
    curve.corr.push_back(csv.num(i, cc));
  }
  return curve;
}

ResolutionResult resolution_at(const FscCurve& curve, double pixel_size, double threshold) {
  require(!curve.corr.empty(), "resolution_at: empty curve");
  for (size_t i = 1; i < curve.corr.size(); ++i) {
    if (curve.corr[i] >= threshold) continue;
    const double prev = curve.corr[i - 1];
    double t = prev > curve.corr[i] ? (prev - threshold) / (prev - curve.corr[i]) : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double r = curve.radius[i - 1] + t * (curve.radius[i] - curve.radius[i - 1]);
    if (r <= 0.0) return {std::numeric_limits<double>::infinity(), false};
    return {pixel_size / r, false};
  }
  return {2.0 * pixel_size, true};
}

double median_angular_error(const std::vector<Quat>& preds, const std::vector<Quat>& truths,
                            const SymmetryGroup& group) {
  require(!preds.empty(), "median_angular_error: empty input");
  require(preds.size() == truths.size(), "median_angular_error: length mismatch");
  std::vector<double> errs(preds.size());
  for (size_t i = 0; i < preds.size(); ++i)
    errs[i] = symmetric_distance(preds[i], truths[i], group);
  std::sort(errs.begin(), errs.end());
  const size_t n = errs.size();
  return n % 2 ? errs[n / 2] : 0.5 * (errs[n / 2 - 1] + errs[n / 2]);
}

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), "spearman: length mismatch");
  require(a.size() >= 2, "spearman: need at least two points");
  const std::vector<double> ra = average_ranks(a), rb = average_ranks(b);
  const size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

UncertaintyReport uncertainty_report(const std::vector<double>& errors,
                                     const std::vector<DispersionStats>& stats) {
  require(errors.size() == stats.size(), "uncertainty_report: length mismatch");
  require(errors.size() >= 10, "uncertainty_report: need at least 10 entries");
  std::vector<double> lmax(stats.size()), trace(stats.size());
  for (size_t i = 0; i < stats.size(); ++i) {
    lmax[i] = stats[i].lambda_max;
    trace[i] = stats[i].trace_stat;
  }
  UncertaintyReport rep;
  rep.spearman_lambda_max = spearman(errors, lmax);
  rep.spearman_trace = spearman(errors, trace);

  const std::vector<double> er = average_ranks(errors);
  rep.scatter.header = {"error", "lambda_max", "trace_stat", "error_quantile"};
  const double denom = static_cast<double>(errors.size() - 1);
  for (size_t i = 0; i < errors.size(); ++i)
    rep.scatter.rows.push_back({format_g9(errors[i]), format_g9(lmax[i]), format_g9(trace[i]),
                                format_g9((er[i] - 1.0) / denom)});
  return rep;
}

}  // namespace ofm
