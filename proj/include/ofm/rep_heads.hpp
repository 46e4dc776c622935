#pragma once

// Differentiable heads mapping raw network outputs to unit quaternions.
// Three arities: 4 (plain normalization), 6 (Gram-Schmidt frame), and 10
// (factorized PSD 4x4 whose minimum-eigenvalue eigenvector is the pose and
// whose spectrum carries a dispersion estimate). Backward passes are
// analytic; gradients are with respect to <q, grad_q> for the returned,
// sign-canonicalized q.

#include <array>

#include "ofm/so3.hpp"

namespace ofm {

using Vec4 = std::array<double, 4>;
using Vec6 = std::array<double, 6>;
using Vec10 = std::array<double, 10>;
using Mat4 = std::array<double, 16>;  // row major

// Cyclic Jacobi eigendecomposition of a symmetric 4x4. Values ascend;
// vectors[k] pairs with values[k] and is sign-canonicalized, so results are
// bit-stable for identical input.
struct SymEig4 {
  std::array<double, 4> values;
  std::array<Vec4, 4> vectors;
};
SymEig4 eig_sym4(const Mat4& a);

// q = raw / |raw|; DegenerateInput below norm 1e-12.
Quat head_quat(const Vec4& raw);
Vec4 head_quat_backward(const Vec4& raw, const Vec4& grad_q);

// Two 3-vectors -> orthonormal frame (Gram-Schmidt, third column by cross
// product) -> quaternion. DegenerateInput when a vector collapses.
Quat head_6d(const Vec6& raw);
Vec6 head_6d_backward(const Vec6& raw, const Vec4& grad_q);

// Upper-triangular factor L(theta) with the layout
//   [ t0 t1 t2 t3 ]
//   [  0 t5 t6 t7 ]
//   [  0  0 t9 t8 ]
//   [  0  0  0 t4 ]
// and A = L * L^T, positive semidefinite by construction.
Mat4 qcqp_build_a(const Vec10& theta);

struct QcqpOutput {
  Quat q;        // eigenvector of the smallest eigenvalue, canonical sign
  SymEig4 eig;   // full spectrum of A, reused by the dispersion stats
  bool degenerate;  // smallest eigenvalue separated by < 1e-9: pose unstable
};
QcqpOutput qcqp_forward(const Vec10& theta);

// First-order eigenvector perturbation: dq = sum_{k>0} v_k (v_k^T dA q) /
// (lambda_0 - lambda_k), chained through A = L L^T. Throws
// DegenerateRepresentation when out.degenerate.
Vec10 qcqp_backward(const Vec10& theta, const QcqpOutput& out, const Vec4& grad_q);

}  // namespace ofm
