#include "ofm/so3.hpp"

#include <algorithm>
#include <cmath>

namespace ofm {

namespace {

constexpr double kUnitTol = 1e-6;

void require_unit(const Quat& q, const char* who) {
  if (std::abs(q.norm() - 1.0) > kUnitTol)
    throw DegenerateInput(std::string(who) + ": quaternion is not unit norm");
}

double wrap_2pi(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  if (a >= 2.0 * kPi) a = 0.0;  // fmod can land exactly on 2pi after the add
  return a;
}

}  // namespace

double Quat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quat Quat::normalized() const {
  double n = norm();
  if (n < 1e-12) throw DegenerateInput("Quat::normalized: near-zero quaternion");
  return {w / n, x / n, y / n, z / n};
}

Quat Quat::canonical() const {
  const double c[4] = {w, x, y, z};
  for (double v : c) {
    if (std::abs(v) > 1e-12) return v < 0.0 ? -*this : *this;
  }
  return *this;
}

double dot(const Quat& a, const Quat& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

Quat operator*(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

double geodesic_distance(const Quat& a, const Quat& b) {
  require_unit(a, "geodesic_distance");
  require_unit(b, "geodesic_distance");
  double d = std::min(std::abs(dot(a, b)), 1.0);
  return 2.0 * std::acos(d);
}

Quat euler_zyz_to_quat(const EulerZYZ& e) {
  Quat qz1{std::cos(e.psi / 2), 0, 0, std::sin(e.psi / 2)};
  Quat qy{std::cos(e.theta / 2), 0, std::sin(e.theta / 2), 0};
  Quat qz2{std::cos(e.phi / 2), 0, 0, std::sin(e.phi / 2)};
  return qz1 * qy * qz2;
}

EulerZYZ quat_to_euler_zyz(const Quat& q) {
  Mat3 m = quat_to_rotmat(q);
  EulerZYZ e;
  double c = std::clamp(m[8], -1.0, 1.0);  // R22 = cos(theta)
  e.theta = std::acos(c);
  double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  if (s < 1e-12) {
    // Gimbal lock: only psi +/- phi is observable; put it all in psi.
    e.phi = 0.0;
    if (c > 0.0)
      e.psi = wrap_2pi(std::atan2(m[3], m[0]));   // R10, R00
    else
      e.psi = wrap_2pi(std::atan2(-m[1], m[4]));  // -R01, R11
    e.theta = c > 0.0 ? 0.0 : kPi;
    return e;
  }
  e.psi = wrap_2pi(std::atan2(m[5], m[2]));    // R12, R02
  e.phi = wrap_2pi(std::atan2(m[7], -m[6]));   // R21, -R20
  return e;
}

Mat3 quat_to_rotmat(const Quat& q_in) {
  require_unit(q_in, "quat_to_rotmat");
  Quat q = q_in.normalized();
  double w = q.w, x = q.x, y = q.y, z = q.z;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

Quat rotmat_to_quat(const Mat3& m) {
  // Shepperd's method: pick the largest of the four squared components.
  double t = m[0] + m[4] + m[8];
  Quat q;
  if (t > m[0] && t > m[4] && t > m[8]) {
    double r = std::sqrt(1.0 + t);
    q.w = 0.5 * r;
    q.x = 0.5 * (m[7] - m[5]) / r;
    q.y = 0.5 * (m[2] - m[6]) / r;
    q.z = 0.5 * (m[3] - m[1]) / r;
  } else if (m[0] >= m[4] && m[0] >= m[8]) {
    double r = std::sqrt(1.0 + m[0] - m[4] - m[8]);
    q.x = 0.5 * r;
    q.w = 0.5 * (m[7] - m[5]) / r;
    q.y = 0.5 * (m[1] + m[3]) / r;
    q.z = 0.5 * (m[2] + m[6]) / r;
  } else if (m[4] >= m[8]) {
    double r = std::sqrt(1.0 - m[0] + m[4] - m[8]);
    q.y = 0.5 * r;
    q.w = 0.5 * (m[2] - m[6]) / r;
    q.x = 0.5 * (m[1] + m[3]) / r;
    q.z = 0.5 * (m[5] + m[7]) / r;
  } else {
    double r = std::sqrt(1.0 - m[0] - m[4] + m[8]);
    q.z = 0.5 * r;
    q.w = 0.5 * (m[3] - m[1]) / r;
    q.x = 0.5 * (m[2] + m[6]) / r;
    q.y = 0.5 * (m[5] + m[7]) / r;
  }
  return q.normalized().canonical();
}

Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
      r[i * 3 + j] = s;
    }
  return r;
}

std::array<double, 3> apply(const Mat3& m, const std::array<double, 3>& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
          m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

Mat3 transpose(const Mat3& m) {
  return {m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]};
}

Quat sample_uniform_rotation(Rng& rng) {
  double u1, u2, s1;
  do {
    u1 = rng.uniform(-1.0, 1.0);
    u2 = rng.uniform(-1.0, 1.0);
    s1 = u1 * u1 + u2 * u2;
  } while (s1 >= 1.0 || s1 == 0.0);
  double u3, u4, s2;
  do {
    u3 = rng.uniform(-1.0, 1.0);
    u4 = rng.uniform(-1.0, 1.0);
    s2 = u3 * u3 + u4 * u4;
  } while (s2 >= 1.0 || s2 == 0.0);
  double scale = std::sqrt((1.0 - s1) / s2);
  return {u1, u2, u3 * scale, u4 * scale};
}

SymmetryGroup SymmetryGroup::c1() { return {"C1", {Quat{1, 0, 0, 0}}}; }

SymmetryGroup SymmetryGroup::d2() {
  // Identity plus the three pi rotations about x, y, z.
  return {"D2",
          {Quat{1, 0, 0, 0}, Quat{0, 1, 0, 0}, Quat{0, 0, 1, 0}, Quat{0, 0, 0, 1}}};
}

SymmetryGroup SymmetryGroup::from_name(const std::string& name) {
  if (name == "C1" || name == "c1") return c1();
  if (name == "D2" || name == "d2") return d2();
  throw DegenerateInput("SymmetryGroup::from_name: unknown group " + name);
}

double symmetric_distance(const Quat& a, const Quat& b, const SymmetryGroup& g) {
  require(!g.elements.empty(), "symmetric_distance: empty symmetry group");
  double best = 2.0 * kPi;
  for (const Quat& s : g.elements) best = std::min(best, geodesic_distance(a, b * s));
  return best;
}

EulerZYZ canonicalize_d2(const EulerZYZ& e) {
  // Right-multiplying by the group elements shifts the Euler triple through
  // its four-candidate orbit; exactly one candidate has theta <= pi/2 and
  // phi in [0, pi) (two tie at theta = pi/2, where group order breaks the
  // tie deterministically).
  const SymmetryGroup g = SymmetryGroup::d2();
  Quat q = euler_zyz_to_quat(e);
  EulerZYZ fallback{};
  double fallback_theta = 2.0 * kPi;
  for (const Quat& s : g.elements) {
    EulerZYZ cand = quat_to_euler_zyz(q * s);
    if (cand.theta <= kPi / 2 + 1e-12 && cand.phi < kPi) return cand;
    if (cand.theta < fallback_theta) {
      fallback_theta = cand.theta;
      fallback = cand;
    }
  }
  return fallback;  // unreachable for finite inputs; kept defensive
}

}  // namespace ofm
