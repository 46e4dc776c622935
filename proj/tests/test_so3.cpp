#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "ofm/orient_table.hpp"
#include "ofm/rng.hpp"
#include "ofm/so3.hpp"
#include "oracles.hpp"

using namespace ofm;

TEST_CASE("rng basics are deterministic and well ranged") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    uint64_t v = c.below(13);
    CHECK(v < 13);
  }
  // gaussian moments
  Rng d(123);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double g = d.gaussian();
    s += g;
    s2 += g * g;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
  CHECK(mix_seed(5, 9) == mix_seed(5, 9));
}

TEST_CASE("hamilton product matches the quaternion algebra") {
  Quat i{0, 1, 0, 0}, j{0, 0, 1, 0}, k{0, 0, 0, 1};
  Quat ij = i * j;
  CHECK(ij.w == doctest::Approx(0));
  CHECK(ij.z == doctest::Approx(1));
  Quat jk = j * k;
  CHECK(jk.x == doctest::Approx(1));
  Quat ii = i * i;
  CHECK(ii.w == doctest::Approx(-1));
}

TEST_CASE("euler to quaternion agrees with explicit matrix products") {
  Rng rng(11);
  for (int t = 0; t < 500; ++t) {
    EulerZYZ e{rng.uniform(0, 2 * kPi), rng.uniform(0, kPi), rng.uniform(0, 2 * kPi)};
    Mat3 lib = quat_to_rotmat(euler_zyz_to_quat(e));
    oracle::Mat3 ref = oracle::mul(oracle::rot_z(e.psi),
                                   oracle::mul(oracle::rot_y(e.theta), oracle::rot_z(e.phi)));
    CHECK(oracle::max_abs_diff(lib, ref) < 1e-12);
  }
}

TEST_CASE("quaternion to matrix agrees with rodrigues construction") {
  Rng rng(12);
  for (int t = 0; t < 500; ++t) {
    double ax = rng.gaussian(), ay = rng.gaussian(), az = rng.gaussian();
    if (std::abs(ax) + std::abs(ay) + std::abs(az) < 1e-3) continue;
    double ang = rng.uniform(0, kPi);
    double n = std::sqrt(ax * ax + ay * ay + az * az);
    double s = std::sin(ang / 2) / n;
    Quat q{std::cos(ang / 2), ax * s, ay * s, az * s};
    CHECK(oracle::max_abs_diff(quat_to_rotmat(q), oracle::axis_angle(ax, ay, az, ang)) < 1e-12);
  }
}

TEST_CASE("matrix round trips and orthonormality") {
  Rng rng(13);
  for (int t = 0; t < 1000; ++t) {
    Quat q = sample_uniform_rotation(rng);
    Mat3 m = quat_to_rotmat(q);
    Mat3 mtm = matmul(transpose(m), m);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(std::abs(mtm[i * 3 + j] - (i == j ? 1.0 : 0.0)) < 1e-9);
    Quat back = rotmat_to_quat(m);
    CHECK(std::abs(dot(q, back)) > 1.0 - 1e-12);
  }
}

TEST_CASE("euler round trip preserves the rotation") {
  Rng rng(14);
  for (int t = 0; t < 1000; ++t) {
    Quat q = sample_uniform_rotation(rng);
    EulerZYZ e = quat_to_euler_zyz(q);
    CHECK(std::abs(dot(q, euler_zyz_to_quat(e))) > 1.0 - 1e-12);
    CHECK(e.psi >= 0);
    CHECK(e.psi < 2 * kPi);
    CHECK(e.theta >= 0);
    CHECK(e.theta <= kPi);
    CHECK(e.phi >= 0);
    CHECK(e.phi < 2 * kPi);
  }
  // gimbal lock: composite angle preserved even though the split is not
  for (double theta : {0.0, kPi}) {
    EulerZYZ e{1.2, theta, 0.7};
    Quat q = euler_zyz_to_quat(e);
    EulerZYZ r = quat_to_euler_zyz(q);
    CHECK(r.phi == 0.0);
    CHECK(std::abs(dot(q, euler_zyz_to_quat(r))) > 1.0 - 1e-12);
  }
}

TEST_CASE("geodesic distance: known values, double cover, metric axioms") {
  Quat id{1, 0, 0, 0};
  Quat z90{std::cos(kPi / 4), 0, 0, std::sin(kPi / 4)};
  CHECK(geodesic_distance(id, id) == doctest::Approx(0));
  CHECK(geodesic_distance(id, z90) == doctest::Approx(kPi / 2));
  CHECK(geodesic_distance(id, -id) == doctest::Approx(0));

  Rng rng(15);
  for (int t = 0; t < 10000; ++t) {
    Quat a = sample_uniform_rotation(rng);
    Quat b = sample_uniform_rotation(rng);
    Quat c = sample_uniform_rotation(rng);
    double dab = geodesic_distance(a, b);
    CHECK(dab == geodesic_distance(b, a));
    CHECK(dab >= 0);
    CHECK(dab <= kPi + 1e-12);
    CHECK(geodesic_distance(a, -b) == doctest::Approx(dab));
    CHECK(geodesic_distance(a, c) <= dab + geodesic_distance(b, c) + 1e-12);
  }
  // distance equals the rotation angle of a * b^-1
  for (int t = 0; t < 200; ++t) {
    Quat a = sample_uniform_rotation(rng);
    Quat b = sample_uniform_rotation(rng);
    Mat3 rel = matmul(quat_to_rotmat(a), transpose(quat_to_rotmat(b)));
    double tr = rel[0] + rel[4] + rel[8];
    double ang = std::acos(std::clamp((tr - 1.0) / 2.0, -1.0, 1.0));
    CHECK(geodesic_distance(a, b) == doctest::Approx(ang).epsilon(1e-7));
  }
  CHECK_THROWS_AS(geodesic_distance(Quat{2, 0, 0, 0}, id), DegenerateInput);
}

TEST_CASE("uniform sampling is unit norm and statistically uniform") {
  Rng rng(16);
  const int n = 3000;
  std::vector<Quat> qs(n);
  double sw2 = 0;
  for (int i = 0; i < n; ++i) {
    qs[i] = sample_uniform_rotation(rng);
    CHECK(std::abs(qs[i].norm() - 1.0) < 1e-12);
    sw2 += qs[i].w * qs[i].w;
  }
  CHECK(std::abs(sw2 / n - 0.25) < 0.02);  // E[w^2] = 1/4 on S^3

  // Monte Carlo pairwise distances against closed-form constants:
  // mean = pi/2 + 2/pi, median solves theta - sin(theta) = pi/2.
  std::vector<double> d;
  d.reserve(100000);
  Rng rng2(17);
  for (int i = 0; i < 100000; ++i) {
    Quat a = sample_uniform_rotation(rng2);
    Quat b = sample_uniform_rotation(rng2);
    d.push_back(geodesic_distance(a, b));
  }
  double mean = 0;
  for (double v : d) mean += v;
  mean /= d.size();
  CHECK(std::abs(mean - 2.2074) < 0.02);
  CHECK(std::abs(oracle::median_of(d) - 2.3099) < 0.02);
}

TEST_CASE("symmetric distance under c1 and d2") {
  SymmetryGroup c1 = SymmetryGroup::c1();
  SymmetryGroup d2 = SymmetryGroup::d2();
  Rng rng(18);
  for (int t = 0; t < 500; ++t) {
    Quat q = sample_uniform_rotation(rng);
    Quat r = sample_uniform_rotation(rng);
    CHECK(symmetric_distance(q, r, c1) == geodesic_distance(q, r));
    CHECK(symmetric_distance(q, r, d2) <= geodesic_distance(q, r) + 1e-12);
    // every group image of r is at distance zero from r
    for (const Quat& s : d2.elements)
      CHECK(symmetric_distance(r, r * s, d2) < 1e-7);
  }
  CHECK_THROWS_AS(symmetric_distance(Quat{1, 0, 0, 0}, Quat{1, 0, 0, 0}, SymmetryGroup{"empty", {}}),
                  std::invalid_argument);
}

TEST_CASE("d2 canonicalization lands in the box and preserves the element") {
  SymmetryGroup d2 = SymmetryGroup::d2();
  // already canonical: unchanged
  EulerZYZ a{0.1, 0.2, 0.3};
  EulerZYZ ca = canonicalize_d2(a);
  CHECK(ca.psi == doctest::Approx(0.1));
  CHECK(ca.theta == doctest::Approx(0.2));
  CHECK(ca.phi == doctest::Approx(0.3));

  // phi out of range folds back with zero symmetric distance
  EulerZYZ b{0.1, 0.2, 3 * kPi / 2};
  EulerZYZ cb = canonicalize_d2(b);
  CHECK(cb.phi < kPi);
  CHECK(cb.theta <= kPi / 2 + 1e-9);
  CHECK(symmetric_distance(euler_zyz_to_quat(b), euler_zyz_to_quat(cb), d2) < 1e-7);

  Rng rng(19);
  for (int t = 0; t < 2000; ++t) {
    Quat q = sample_uniform_rotation(rng);
    EulerZYZ e = quat_to_euler_zyz(q);
    EulerZYZ c = canonicalize_d2(e);
    CHECK(c.psi >= 0);
    CHECK(c.psi < 2 * kPi);
    CHECK(c.theta >= 0);
    CHECK(c.theta <= kPi / 2 + 1e-9);
    CHECK(c.phi >= 0);
    CHECK(c.phi < kPi);
    CHECK(symmetric_distance(q, euler_zyz_to_quat(c), d2) < 1e-7);
    // idempotent
    EulerZYZ c2 = canonicalize_d2(c);
    CHECK(std::abs(c2.psi - c.psi) < 1e-9);
    CHECK(std::abs(c2.theta - c.theta) < 1e-9);
    CHECK(std::abs(c2.phi - c.phi) < 1e-9);
  }
}

TEST_CASE("orientation table round trips byte for byte") {
  OrientTable t;
  Rng rng(20);
  for (int i = 0; i < 25; ++i) {
    OrientRecord r;
    r.index = i;
    r.q = sample_uniform_rotation(rng);
    r.shift_x = rng.uniform(-2, 2);
    r.shift_y = rng.uniform(-2, 2);
    r.defocus = rng.uniform(5000, 25000);
    r.snr_target = 0.1;
    t.records.push_back(r);
  }
  const char* p1 = "ot_rt1.csv";
  const char* p2 = "ot_rt2.csv";
  t.write_csv(p1);
  OrientTable back = OrientTable::read_csv(p1);
  back.write_csv(p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  CHECK(s1.substr(0, s1.find('\n')) ==
        "index,qw,qx,qy,qz,shift_x,shift_y,defocus,snr_target");
  REQUIRE(back.records.size() == t.records.size());
  for (size_t i = 0; i < t.records.size(); ++i)
    CHECK(geodesic_distance(back.records[i].q.normalized(), t.records[i].q) < 1e-6);
  std::remove(p1);
  std::remove(p2);
}
