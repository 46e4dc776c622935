#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <vector>

#include "ofm/common.hpp"
#include "ofm/fft.hpp"
#include "ofm/recon_eval.hpp"
#include "ofm/rng.hpp"
#include "ofm/simulator.hpp"
#include "ofm/so3.hpp"
#include "oracles.hpp"

using namespace ofm;

namespace {

std::vector<std::array<double, 2>> zero_shifts(size_t n) {
  return std::vector<std::array<double, 2>>(n, {0.0, 0.0});
}

Quat quat_about(double ax, double ay, double az, double angle) {
  const double n = std::sqrt(ax * ax + ay * ay + az * az);
  const double s = std::sin(angle / 2) / n;
  return Quat{std::cos(angle / 2), ax * s, ay * s, az * s};
}

// independent trilinear lookup at absolute voxel coordinates, zero outside
double sample_volume(const Volume& v, double x, double y, double z) {
  const int n = v.side;
  const int bx = static_cast<int>(std::floor(x));
  const int by = static_cast<int>(std::floor(y));
  const int bz = static_cast<int>(std::floor(z));
  const double tx = x - bx, ty = y - by, tz = z - bz;
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const int ix = bx + dx, iy = by + dy, iz = bz + dz;
        if (ix < 0 || iy < 0 || iz < 0 || ix >= n || iy >= n || iz >= n) continue;
        const double w =
            (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
        acc += w * v.at(ix, iy, iz);
      }
  return acc;
}

}  // namespace

TEST_CASE("single identity-orientation image reproduces its spectrum on the central slice") {
  const int n = 32;
  Volume vol = make_phantom(n, 1.0, PhantomKind::Asymmetric, 11);
  Image img = project(vol, Quat{1, 0, 0, 0}, 0.0, 0.0);

  Volume rec = reconstruct({img}, {Quat{1, 0, 0, 0}}, zero_shifts(1));
  REQUIRE(rec.side == n);

  std::vector<std::complex<double>> spec3(static_cast<size_t>(n) * n * n);
  for (size_t i = 0; i < spec3.size(); ++i) spec3[i] = rec.data[i];
  Fft3D fft3(n);
  fft3.forward(spec3.data());

  std::vector<std::complex<double>> spec2(static_cast<size_t>(n) * n);
  for (size_t i = 0; i < spec2.size(); ++i) spec2[i] = img.pixels[i];
  Fft2D fft2(n);
  fft2.forward(spec2.data());

  // compare over the resolved disc; the insertion skips the square's corners
  double num = 0.0, den = 0.0;
  for (int ky = 0; ky < n; ++ky) {
    for (int kx = 0; kx < n; ++kx) {
      const int fx = freq_index(kx, n), fy = freq_index(ky, n);
      if (fx * fx + fy * fy > (n / 2) * (n / 2)) continue;
      const std::complex<double> a = spec3[static_cast<size_t>(ky) * n + kx];
      const std::complex<double> b = spec2[static_cast<size_t>(ky) * n + kx];
      num += std::norm(a - b);
      den += std::norm(b);
    }
  }
  CHECK(std::sqrt(num / den) < 0.05);
  CHECK(std::sqrt(num / den) < 1e-9);  // identity slice lands on grid points
}

TEST_CASE("duplicating every image leaves the reconstruction unchanged") {
  const int n = 32;
  Volume vol = make_phantom(n, 1.0, PhantomKind::Asymmetric, 3);
  Rng rng(17);
  std::vector<Image> images;
  std::vector<Quat> quats;
  for (int i = 0; i < 40; ++i) {
    Quat q = sample_uniform_rotation(rng);
    quats.push_back(q);
    images.push_back(project(vol, q, 0.0, 0.0));
  }
  Volume once = reconstruct(images, quats, zero_shifts(images.size()));

  std::vector<Image> twice_img = images;
  std::vector<Quat> twice_q = quats;
  twice_img.insert(twice_img.end(), images.begin(), images.end());
  twice_q.insert(twice_q.end(), quats.begin(), quats.end());
  Volume twice = reconstruct(twice_img, twice_q, zero_shifts(twice_img.size()));

  double worst = 0.0;
  for (size_t i = 0; i < once.data.size(); ++i)
    worst = std::max(worst, std::abs(once.data[i] - twice.data[i]));
  CHECK(worst < 1e-9);
}

TEST_CASE("reconstruct rejects empty and mismatched inputs") {
  CHECK_THROWS_AS(reconstruct({}, {}, {}), std::invalid_argument);
  Volume vol = make_phantom(16, 1.0, PhantomKind::Asymmetric, 1);
  Image img = project(vol, Quat{1, 0, 0, 0}, 0.0, 0.0);
  CHECK_THROWS_AS(reconstruct({img}, {}, zero_shifts(1)), std::invalid_argument);
  CHECK_THROWS_AS(reconstruct({img}, {Quat{1, 0, 0, 0}}, zero_shifts(2)), std::invalid_argument);
}

TEST_CASE("dense true-orientation reconstruction matches the source volume") {
  const int n = 48;
  Volume vol = make_phantom(n, 1.0, PhantomKind::Asymmetric, 5);
  std::vector<Quat> quats = grid_orientations(200, 3);
  std::vector<Image> images;
  images.reserve(quats.size());
  for (const Quat& q : quats) images.push_back(project(vol, q, 0.0, 0.0));

  Volume rec = reconstruct(images, quats, zero_shifts(images.size()));
  FscCurve curve = fsc(rec, vol);

  // high correlation through 0.3x Nyquist (shells 1..7 for side 48)
  const int limit = static_cast<int>(0.3 * (n / 2));
  for (int s = 1; s <= limit; ++s) {
    INFO("shell ", s, " corr ", curve.corr[s]);
    CHECK(curve.corr[s] >= 0.9);
  }
}

TEST_CASE("known shifts are undone before insertion") {
  const int n = 32;
  Volume vol = make_phantom(n, 1.0, PhantomKind::Asymmetric, 9);
  Rng rng(23);
  std::vector<Quat> quats = grid_orientations(150, 2);
  std::vector<Image> images;
  std::vector<std::array<double, 2>> shifts;
  for (const Quat& q : quats) {
    const double sx = rng.uniform(-2.0, 2.0), sy = rng.uniform(-2.0, 2.0);
    images.push_back(project(vol, q, sx, sy));
    shifts.push_back({sx, sy});
  }
  Volume rec = reconstruct(images, quats, shifts);
  FscCurve curve = fsc(rec, vol);
  const int limit = static_cast<int>(0.3 * (n / 2));
  for (int s = 1; s <= limit; ++s) {
    INFO("shell ", s, " corr ", curve.corr[s]);
    CHECK(curve.corr[s] >= 0.9);
  }
}

TEST_CASE("relabeling all orientations by one right factor rotates the volume") {
  const int n = 32;
  Volume vol = make_phantom(n, 1.0, PhantomKind::Asymmetric, 29);
  std::vector<Quat> quats = grid_orientations(150, 2);
  std::vector<Image> images;
  images.reserve(quats.size());
  for (const Quat& q : quats) images.push_back(project(vol, q, 0.0, 0.0));

  const Quat g = quat_about(1.0, 2.0, 3.0, 0.7);
  std::vector<Quat> relabeled;
  relabeled.reserve(quats.size());
  for (const Quat& q : quats) relabeled.push_back(q * g);

  Volume plain = reconstruct(images, quats, zero_shifts(images.size()));
  Volume turned = reconstruct(images, relabeled, zero_shifts(images.size()));

  // turned(y) should equal plain evaluated at R(g) * y
  const Mat3 m = quat_to_rotmat(g);
  const double c = n / 2;
  double num = 0.0, den = 0.0;
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double x = ix - c, y = iy - c, z = iz - c;
        if (x * x + y * y + z * z > 0.38 * n * 0.38 * n) continue;
        const double px = m[0] * x + m[1] * y + m[2] * z + c;
        const double py = m[3] * x + m[4] * y + m[5] * z + c;
        const double pz = m[6] * x + m[7] * y + m[8] * z + c;
        const double a = sample_volume(plain, px, py, pz);
        const double b = turned.at(ix, iy, iz);
        num += (a - b) * (a - b);
        den += a * a;
      }
  CHECK(std::sqrt(num / den) < 0.05);
}

TEST_CASE("shell correlation properties") {
  const int n = 48;
  Volume vol = make_phantom(n, 1.0, PhantomKind::Asymmetric, 7);

  FscCurve self = fsc(vol, vol);
  REQUIRE(self.radius.size() == static_cast<size_t>(n / 2 + 1));
  CHECK(self.radius.front() == 0.0);
  CHECK(self.radius.back() == doctest::Approx(0.5));
  for (size_t s = 1; s < self.radius.size(); ++s)
    CHECK(self.radius[s] > self.radius[s - 1]);
  for (double c : self.corr) CHECK(c == doctest::Approx(1.0).epsilon(1e-9));

  Volume doubled = vol;
  for (double& v : doubled.data) v *= 2.0;
  FscCurve scaled = fsc(vol, doubled);
  for (double c : scaled.corr) CHECK(c == doctest::Approx(1.0).epsilon(1e-9));

  Volume other = make_phantom(n, 1.0, PhantomKind::Asymmetric, 8);
  FscCurve ab = fsc(vol, other);
  FscCurve ba = fsc(other, vol);
  for (size_t s = 0; s < ab.corr.size(); ++s) CHECK(ab.corr[s] == ba.corr[s]);

  Volume bad;
  bad.side = n / 2;
  bad.data.assign(static_cast<size_t>(n / 2) * (n / 2) * (n / 2), 0.0);
  CHECK_THROWS_AS(fsc(vol, bad), std::invalid_argument);
}

TEST_CASE("independent noise volumes decorrelate") {
  const int n = 48;
  Rng rng(101);
  Volume a, b;
  a.side = b.side = n;
  const size_t voxels = static_cast<size_t>(n) * n * n;
  a.data.resize(voxels);
  b.data.resize(voxels);
  for (size_t i = 0; i < voxels; ++i) a.data[i] = rng.gaussian();
  for (size_t i = 0; i < voxels; ++i) b.data[i] = rng.gaussian();

  FscCurve curve = fsc(a, b);
  // shell 0 is a single coefficient whose correlation is a bare sign, so the
  // decorrelation statement starts at shell 1
  double mean_abs = 0.0;
  for (size_t s = 1; s < curve.corr.size(); ++s) mean_abs += std::abs(curve.corr[s]);
  mean_abs /= static_cast<double>(curve.corr.size() - 1);
  CHECK(mean_abs < 0.05);
}

TEST_CASE("threshold resolution readout") {
  FscCurve flat;
  for (int s = 0; s <= 16; ++s) {
    flat.radius.push_back(s / 32.0);
    flat.corr.push_back(1.0);
  }
  ResolutionResult lim = resolution_at(flat, 1.5);
  CHECK(lim.at_limit);
  CHECK(lim.angstrom == doctest::Approx(3.0));

  // step from 1 to 0 between shells 7 and 8 of a 32-box
  FscCurve step = flat;
  for (int s = 8; s <= 16; ++s) step.corr[s] = 0.0;
  ResolutionResult r = resolution_at(step, 1.5);
  CHECK_FALSE(r.at_limit);
  const double cross = (7.0 + (1.0 - 0.143)) / 32.0;
  CHECK(r.angstrom == doctest::Approx(1.5 / cross).epsilon(1e-12));

  // linear descent: corr(s) = 1 - s/16 crosses 0.143 at s = 13.712
  FscCurve ramp;
  for (int s = 0; s <= 16; ++s) {
    ramp.radius.push_back(s / 32.0);
    ramp.corr.push_back(1.0 - s / 16.0);
  }
  ResolutionResult rr = resolution_at(ramp, 1.0);
  CHECK_FALSE(rr.at_limit);
  CHECK(rr.angstrom == doctest::Approx(32.0 / (16.0 * (1.0 - 0.143))).epsilon(1e-12));

  CHECK_THROWS_AS(resolution_at(FscCurve{}, 1.0), std::invalid_argument);
}

TEST_CASE("median angular error") {
  Rng rng(41);
  SymmetryGroup c1 = SymmetryGroup::c1();

  std::vector<Quat> truths;
  for (int i = 0; i < 101; ++i) truths.push_back(sample_uniform_rotation(rng));

  // the arc readout bottoms out near 2e-8 when |dot| rounds just under 1
  CHECK(median_angular_error(truths, truths, c1) < 1e-6);

  std::vector<Quat> negated;
  for (const Quat& q : truths) negated.push_back(Quat{-q.w, -q.x, -q.y, -q.z});
  CHECK(median_angular_error(negated, truths, c1) < 1e-6);

  // a constant known perturbation angle becomes the median exactly
  const double alpha = 0.37;
  std::vector<Quat> off;
  for (const Quat& q : truths) off.push_back(q * quat_about(0.3, -1.0, 0.2, alpha));
  CHECK(median_angular_error(off, truths, c1) == doctest::Approx(alpha).epsilon(1e-7));

  // D2: any symmetry relabel reads as zero error
  SymmetryGroup d2 = SymmetryGroup::d2();
  std::vector<Quat> relabeled;
  for (size_t i = 0; i < truths.size(); ++i) {
    const Quat& s = d2.elements[i % d2.elements.size()];
    relabeled.push_back(truths[i] * s);
  }
  CHECK(median_angular_error(relabeled, truths, d2) < 1e-6);

  CHECK_THROWS_AS(median_angular_error({}, {}, c1), std::invalid_argument);
}

TEST_CASE("random orientations sit near the known median relative angle") {
  Rng rng(55);
  SymmetryGroup c1 = SymmetryGroup::c1();
  std::vector<Quat> a, b;
  for (int i = 0; i < 10000; ++i) {
    a.push_back(sample_uniform_rotation(rng));
    b.push_back(sample_uniform_rotation(rng));
  }
  CHECK(median_angular_error(a, b, c1) == doctest::Approx(2.3099).epsilon(0.022));
}

TEST_CASE("spearman rank correlation") {
  std::vector<double> inc = {0.1, 0.5, 0.9, 2.0, 3.5};
  std::vector<double> dec = {5.0, 4.0, 3.0, 2.0, 1.0};
  CHECK(*spearman(inc, inc) == doctest::Approx(1.0));
  CHECK(*spearman(inc, dec) == doctest::Approx(-1.0));

  // any strictly monotone transform leaves the statistic fixed
  std::vector<double> cubed;
  for (double v : inc) cubed.push_back(v * v * v);
  CHECK(*spearman(inc, cubed) == doctest::Approx(1.0));

  // tie handling against a hand-computed value
  std::vector<double> a = {1.0, 2.0, 2.0, 3.0};
  std::vector<double> b = {10.0, 20.0, 30.0, 40.0};
  CHECK(*spearman(a, b) == doctest::Approx(std::sqrt(0.9)).epsilon(1e-12));

  CHECK_FALSE(spearman({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}).has_value());
  CHECK_THROWS_AS(spearman({1.0}, {1.0}), std::invalid_argument);

  // null distribution: a random permutation shows no rank association
  Rng rng(71);
  std::vector<double> x(1000), y;
  for (auto& v : x) v = rng.uniform();
  y = x;
  rng.shuffle(y);
  CHECK(std::abs(*spearman(x, y)) < 0.1);
}

TEST_CASE("uncertainty report") {
  Rng rng(83);
  const int n = 500;
  std::vector<double> errors(n);
  for (auto& e : errors) e = rng.uniform(0.0, 2.0);

  std::vector<DispersionStats> stats(n);
  for (int i = 0; i < n; ++i) {
    stats[i].lambda_max = errors[i];            // perfectly informative
    stats[i].trace_stat = -1.0 / (errors[i] + 0.1);  // monotone transform
  }
  UncertaintyReport rep = uncertainty_report(errors, stats);
  REQUIRE(rep.spearman_lambda_max.has_value());
  REQUIRE(rep.spearman_trace.has_value());
  CHECK(*rep.spearman_lambda_max == doctest::Approx(1.0));
  CHECK(*rep.spearman_trace == doctest::Approx(1.0));

  REQUIRE(rep.scatter.header ==
          std::vector<std::string>{"error", "lambda_max", "trace_stat", "error_quantile"});
  REQUIRE(rep.scatter.rows.size() == static_cast<size_t>(n));
  const int cq = rep.scatter.col("error_quantile");
  double qmin = 1.0, qmax = 0.0;
  for (int i = 0; i < n; ++i) {
    const double q = rep.scatter.num(i, cq);
    qmin = std::min(qmin, q);
    qmax = std::max(qmax, q);
  }
  CHECK(qmin == doctest::Approx(0.0));
  CHECK(qmax == doctest::Approx(1.0));

  // permuted stats carry no information
  std::vector<DispersionStats> shuffled = stats;
  std::vector<double> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = stats[i].lambda_max;
  rng.shuffle(perm);
  for (int i = 0; i < n; ++i) {
    shuffled[i].lambda_max = perm[i];
    shuffled[i].trace_stat = perm[i];
  }
  UncertaintyReport null_rep = uncertainty_report(errors, shuffled);
  CHECK(std::abs(*null_rep.spearman_lambda_max) < 0.15);

  // constant statistic reads as absent, not as a number
  std::vector<DispersionStats> flat(n);
  UncertaintyReport flat_rep = uncertainty_report(errors, flat);
  CHECK_FALSE(flat_rep.spearman_lambda_max.has_value());
  CHECK_FALSE(flat_rep.spearman_trace.has_value());

  CHECK_THROWS_AS(uncertainty_report({1, 2, 3}, std::vector<DispersionStats>(3)),
                  std::invalid_argument);
}

TEST_CASE("fsc csv round trip") {
  FscCurve curve;
  for (int s = 0; s <= 8; ++s) {
    curve.radius.push_back(s / 16.0);
    curve.corr.push_back(1.0 - s * 0.11);
  }
  const std::string path = "fsc_roundtrip_test.csv";
  write_fsc_csv(path, curve);
  FscCurve back = read_fsc_csv(path);
  REQUIRE(back.radius.size() == curve.radius.size());
  for (size_t s = 0; s < curve.radius.size(); ++s) {
    CHECK(back.radius[s] == doctest::Approx(curve.radius[s]).epsilon(1e-9));
    CHECK(back.corr[s] == doctest::Approx(curve.corr[s]).epsilon(1e-9));
  }
  std::remove(path.c_str());
}
