#pragma once

// Rotation representations and metrics on SO(3). Unit quaternions are the
// primary representation; q and -q denote the same rotation, and every
// function here is invariant under that sign flip unless it explicitly
// returns a sign-canonicalized value.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ofm/common.hpp"
#include "ofm/rng.hpp"

namespace ofm {

struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  double norm() const;
  Quat normalized() const;
  Quat conjugate() const { return {w, -x, -y, -z}; }
  Quat operator-() const { return {-w, -x, -y, -z}; }
  // Flips sign so the first component with magnitude above 1e-12 is positive.
  Quat canonical() const;
};

double dot(const Quat& a, const Quat& b);
Quat operator*(const Quat& a, const Quat& b);  // Hamilton product

// ZYZ Euler angles: rotation(psi, theta, phi) = Rz(psi) * Ry(theta) * Rz(phi).
struct EulerZYZ {
  double psi = 0.0, theta = 0.0, phi = 0.0;
};

// Row-major 3x3 rotation matrix.
using Mat3 = std::array<double, 9>;

// Geodesic distance 2*acos(|<a,b>|), range [0, pi]. Inputs must be unit
// within 1e-6 or DegenerateInput is thrown.
double geodesic_distance(const Quat& a, const Quat& b);

Quat euler_zyz_to_quat(const EulerZYZ& e);

// Inverse of euler_zyz_to_quat up to the quaternion double cover and, at
// gimbal lock (theta near 0 or pi), up to the psi/phi split: there phi is
// reported as 0 and psi carries the composite in-plane angle. Output ranges:
// psi, phi in [0, 2pi), theta in [0, pi].
EulerZYZ quat_to_euler_zyz(const Quat& q);

Mat3 quat_to_rotmat(const Quat& q);
Quat rotmat_to_quat(const Mat3& m);

Mat3 matmul(const Mat3& a, const Mat3& b);
std::array<double, 3> apply(const Mat3& m, const std::array<double, 3>& v);
Mat3 transpose(const Mat3& m);

// Uniform (Haar) random rotation: two-disc rejection construction whose
// output is unit-norm by algebra, not by a trailing normalization.
Quat sample_uniform_rotation(Rng& rng);

// Point-group symmetries of the imaged object. Elements act by right
// multiplication: q and q*s produce identical projections for every s.
struct SymmetryGroup {
  std::string name;
  std::vector<Quat> elements;

  static SymmetryGroup c1();
  static SymmetryGroup d2();
  static SymmetryGroup from_name(const std::string& name);  // "C1" | "D2"
};

// min over s of geodesic_distance(a, b*s); equals geodesic_distance for C1.
double symmetric_distance(const Quat& a, const Quat& b, const SymmetryGroup& g);

// Maps Euler angles to the equivalent representative inside the D2
// fundamental box psi in [0,2pi), theta in [0,pi/2], phi in [0,pi), where the
// theta = pi/2 boundary belongs to the lower cell. The returned angles
// describe the same projection as the input under D2.
EulerZYZ canonicalize_d2(const EulerZYZ& e);

}  // namespace ofm
