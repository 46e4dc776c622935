#include "ofm/rep_heads.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ofm {

namespace {

void canonicalize_sign(Vec4& v) {
  for (double c : v) {
    if (std::abs(c) > 1e-12) {
      if (c < 0)
        for (double& x : v) x = -x;
      return;
    }
  }
}

}  // namespace

SymEig4 eig_sym4(const Mat4& a_in) {
  double a[4][4], v[4][4];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      a[i][j] = 0.5 * (a_in[i * 4 + j] + a_in[j * 4 + i]);  // kill rounding skew
      v[i][j] = i == j ? 1.0 : 0.0;
    }
  double frob2 = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) frob2 += a[i][j] * a[i][j];
  const double stop = 1e-28 * std::max(1.0, frob2);

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q) off += a[p][q] * a[p][q];
    if (off < stop) break;
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q) {
        double apq = a[p][q];
        if (apq == 0.0) continue;
        double tau = (a[q][q] - a[p][p]) / (2.0 * apq);
        double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        for (int k = 0; k < 4; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 4; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 4; ++k) {
          double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }

  std::array<int, 4> idx{0, 1, 2, 3};
  std::sort(idx.begin(), idx.end(), [&](int i, int j) {
    return a[i][i] != a[j][j] ? a[i][i] < a[j][j] : i < j;
  });
  SymEig4 out;
  for (int k = 0; k < 4; ++k) {
    out.values[k] = a[idx[k]][idx[k]];
    for (int r = 0; r < 4; ++r) out.vectors[k][r] = v[r][idx[k]];
    canonicalize_sign(out.vectors[k]);
  }
  return out;
}

Quat head_quat(const Vec4& raw) {
  double n = std::sqrt(raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2] + raw[3] * raw[3]);
  if (n <= 1e-12) throw DegenerateInput("head_quat: near-zero raw vector");
  return {raw[0] / n, raw[1] / n, raw[2] / n, raw[3] / n};
}

Vec4 head_quat_backward(const Vec4& raw, const Vec4& grad_q) {
  double n = std::sqrt(raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2] + raw[3] * raw[3]);
  if (n <= 1e-12) throw DegenerateInput("head_quat_backward: near-zero raw vector");
  Vec4 q{raw[0] / n, raw[1] / n, raw[2] / n, raw[3] / n};
  double qg = q[0] * grad_q[0] + q[1] * grad_q[1] + q[2] * grad_q[2] + q[3] * grad_q[3];
  Vec4 g;
  for (int i = 0; i < 4; ++i) g[i] = (grad_q[i] - q[i] * qg) / n;
  return g;
}

namespace {

struct Vec3 {
  double v[3];
  double dot(const Vec3& o) const { return v[0] * o.v[0] + v[1] * o.v[1] + v[2] * o.v[2]; }
  double norm() const { return std::sqrt(dot(*this)); }
};

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {{a.v[1] * b.v[2] - a.v[2] * b.v[1], a.v[2] * b.v[0] - a.v[0] * b.v[2],
           a.v[0] * b.v[1] - a.v[1] * b.v[0]}};
}

// Shared forward for head_6d and its backward: Gram-Schmidt frame, matrix
// with columns (b1, b2, b3), then Shepperd. Returns the intermediates the
// chain rule needs. Branch ids: 0 trace, 1/2/3 diagonal-dominant.
struct Frame6d {
  Vec3 a1, a2, b1, w2, b2, b3;
  double n1, n2;
  Mat3 r;
  int branch;
  Vec4 q_raw;   // before normalization and sign flip
  double q_norm;
  bool flipped;
  Quat q;
};

Vec4 shepperd_raw(const Mat3& m, int& branch) {
  double t = m[0] + m[4] + m[8];
  Vec4 q;
  if (t > m[0] && t > m[4] && t > m[8]) {
    branch = 0;
    double r = std::sqrt(1.0 + t);
    q = {0.5 * r, 0.5 * (m[7] - m[5]) / r, 0.5 * (m[2] - m[6]) / r, 0.5 * (m[3] - m[1]) / r};
  } else if (m[0] >= m[4] && m[0] >= m[8]) {
    branch = 1;
    double r = std::sqrt(1.0 + m[0] - m[4] - m[8]);
    q = {0.5 * (m[7] - m[5]) / r, 0.5 * r, 0.5 * (m[1] + m[3]) / r, 0.5 * (m[2] + m[6]) / r};
  } else if (m[4] >= m[8]) {
    branch = 2;
    double r = std::sqrt(1.0 - m[0] + m[4] - m[8]);
    q = {0.5 * (m[2] - m[6]) / r, 0.5 * (m[1] + m[3]) / r, 0.5 * r, 0.5 * (m[5] + m[7]) / r};
  } else {
    branch = 3;
    double r = std::sqrt(1.0 - m[0] - m[4] + m[8]);
    q = {0.5 * (m[3] - m[1]) / r, 0.5 * (m[2] + m[6]) / r, 0.5 * (m[5] + m[7]) / r, 0.5 * r};
  }
  return q;
}

// Accumulates the pullback of <g, q_raw> through the branch formulas into a
// 3x3 matrix gradient.
void shepperd_backward(const Mat3& m, int branch, const Vec4& g, Mat3& gm) {
  auto add = [&](int idx, double val) { gm[idx] += val; };
  if (branch == 0) {
    double r = std::sqrt(1.0 + m[0] + m[4] + m[8]);
    double x = 0.5 * (m[7] - m[5]) / r, y = 0.5 * (m[2] - m[6]) / r,
           z = 0.5 * (m[3] - m[1]) / r;
    double gr = 0.5 * g[0] - (g[1] * x + g[2] * y + g[3] * z) / r;
    double c = 0.5 / r;
    add(0, gr * c);
    add(4, gr * c);
    add(8, gr * c);
    add(7, g[1] * c);
    add(5, -g[1] * c);
    add(2, g[2] * c);
    add(6, -g[2] * c);
    add(3, g[3] * c);
    add(1, -g[3] * c);
  } else if (branch == 1) {
    double r = std::sqrt(1.0 + m[0] - m[4] - m[8]);
    double w = 0.5 * (m[7] - m[5]) / r, y = 0.5 * (m[1] + m[3]) / r,
           z = 0.5 * (m[2] + m[6]) / r;
    double gr = 0.5 * g[1] - (g[0] * w + g[2] * y + g[3] * z) / r;
    double c = 0.5 / r;
    add(0, gr * c);
    add(4, -gr * c);
    add(8, -gr * c);
    add(7, g[0] * c);
    add(5, -g[0] * c);
    add(1, g[2] * c);
    add(3, g[2] * c);
    add(2, g[3] * c);
    add(6, g[3] * c);
  } else if (branch == 2) {
    double r = std::sqrt(1.0 - m[0] + m[4] - m[8]);
    double w = 0.5 * (m[2] - m[6]) / r, x = 0.5 * (m[1] + m[3]) / r,
           z = 0.5 * (m[5] + m[7]) / r;
    double gr = 0.5 * g[2] - (g[0] * w + g[1] * x + g[3] * z) / r;
    double c = 0.5 / r;
    add(0, -gr * c);
    add(4, gr * c);
    add(8, -gr * c);
    add(2, g[0] * c);
    add(6, -g[0] * c);
    add(1, g[1] * c);
    add(3, g[1] * c);
    add(5, g[3] * c);
    add(7, g[3] * c);
  } else {
    double r = std::sqrt(1.0 - m[0] - m[4] + m[8]);
    double w = 0.5 * (m[3] - m[1]) / r, x = 0.5 * (m[2] + m[6]) / r,
           y = 0.5 * (m[5] + m[7]) / r;
    double gr = 0.5 * g[3] - (g[0] * w + g[1] * x + g[2] * y) / r;
    double c = 0.5 / r;
    add(0, -gr * c);
    add(4, -gr * c);
    add(8, gr * c);
    add(3, g[0] * c);
    add(1, -g[0] * c);
    add(2, g[1] * c);
    add(6, g[1] * c);
    add(5, g[2] * c);
    add(7, g[2] * c);
  }
}

Frame6d frame_6d(const Vec6& raw) {
  Frame6d f;
  f.a1 = {{raw[0], raw[1], raw[2]}};
  f.a2 = {{raw[3], raw[4], raw[5]}};
  f.n1 = f.a1.norm();
  if (f.n1 <= 1e-12) throw DegenerateInput("head_6d: first vector near zero");
  for (int i = 0; i < 3; ++i) f.b1.v[i] = f.a1.v[i] / f.n1;
  double proj = f.b1.dot(f.a2);
  for (int i = 0; i < 3; ++i) f.w2.v[i] = f.a2.v[i] - proj * f.b1.v[i];
  f.n2 = f.w2.norm();
  if (f.n2 <= 1e-12) throw DegenerateInput("head_6d: vectors are collinear");
  for (int i = 0; i < 3; ++i) f.b2.v[i] = f.w2.v[i] / f.n2;
  f.b3 = cross(f.b1, f.b2);
  for (int i = 0; i < 3; ++i) {
    f.r[i * 3 + 0] = f.b1.v[i];
    f.r[i * 3 + 1] = f.b2.v[i];
    f.r[i * 3 + 2] = f.b3.v[i];
  }
  f.q_raw = shepperd_raw(f.r, f.branch);
  f.q_norm = std::sqrt(f.q_raw[0] * f.q_raw[0] + f.q_raw[1] * f.q_raw[1] +
                       f.q_raw[2] * f.q_raw[2] + f.q_raw[3] * f.q_raw[3]);
  Vec4 qn{f.q_raw[0] / f.q_norm, f.q_raw[1] / f.q_norm, f.q_raw[2] / f.q_norm,
          f.q_raw[3] / f.q_norm};
  Vec4 qc = qn;
  canonicalize_sign(qc);
  f.flipped = qc[0] * qn[0] + qc[1] * qn[1] + qc[2] * qn[2] + qc[3] * qn[3] < 0;
  f.q = {qc[0], qc[1], qc[2], qc[3]};
  return f;
}

}  // namespace

Quat head_6d(const Vec6& raw) { return frame_6d(raw).q; }

Vec6 head_6d_backward(const Vec6& raw, const Vec4& grad_q) {
  Frame6d f = frame_6d(raw);
  // undo sign canonicalization, then pull back through normalization
  Vec4 g = grad_q;
  if (f.flipped)
    for (double& x : g) x = -x;
  Vec4 qn{f.q_raw[0] / f.q_norm, f.q_raw[1] / f.q_norm, f.q_raw[2] / f.q_norm,
          f.q_raw[3] / f.q_norm};
  double qg = qn[0] * g[0] + qn[1] * g[1] + qn[2] * g[2] + qn[3] * g[3];
  Vec4 g_raw;
  for (int i = 0; i < 4; ++i) g_raw[i] = (g[i] - qn[i] * qg) / f.q_norm;

  Mat3 gm{};
  shepperd_backward(f.r, f.branch, g_raw, gm);

  Vec3 gb3{{gm[2], gm[5], gm[8]}};
  // b3 = b1 x b2: pull the cross product back via triple-product identities
  Vec3 t1 = cross(f.b2, gb3);
  Vec3 t2 = cross(gb3, f.b1);
  Vec3 gb1{{gm[0] + t1.v[0], gm[3] + t1.v[1], gm[6] + t1.v[2]}};
  Vec3 gb2{{gm[1] + t2.v[0], gm[4] + t2.v[1], gm[7] + t2.v[2]}};

  // b2 = w2 / n2
  double b2g = f.b2.dot(gb2);
  Vec3 gw2;
  for (int i = 0; i < 3; ++i) gw2.v[i] = (gb2.v[i] - f.b2.v[i] * b2g) / f.n2;

  // w2 = a2 - (b1 . a2) b1
  double proj = f.b1.dot(f.a2);
  double b1gw = f.b1.dot(gw2);
  Vec3 ga2;
  for (int i = 0; i < 3; ++i) ga2.v[i] = gw2.v[i] - f.b1.v[i] * b1gw;
  for (int i = 0; i < 3; ++i) gb1.v[i] += -b1gw * f.a2.v[i] - proj * gw2.v[i];

  // b1 = a1 / n1
  double b1g = f.b1.dot(gb1);
  Vec6 out;
  for (int i = 0; i < 3; ++i) out[i] = (gb1.v[i] - f.b1.v[i] * b1g) / f.n1;
  for (int i = 0; i < 3; ++i) out[3 + i] = ga2.v[i];
  return out;
}

namespace {

Mat4 build_l(const Vec10& t) {
  Mat4 l{};
  l[0] = t[0];
  l[1] = t[1];
  l[2] = t[2];
  l[3] = t[3];
  l[5] = t[5];
  l[6] = t[6];
  l[7] = t[7];
  l[10] = t[9];
  l[11] = t[8];
  l[15] = t[4];
  return l;
}

}  // namespace

Mat4 qcqp_build_a(const Vec10& theta) {
  Mat4 l = build_l(theta);
  Mat4 a{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double s = 0;
      for (int k = 0; k < 4; ++k) s += l[i * 4 + k] * l[j * 4 + k];
      a[i * 4 + j] = s;
    }
  return a;
}

QcqpOutput qcqp_forward(const Vec10& theta) {
  QcqpOutput out;
  out.eig = eig_sym4(qcqp_build_a(theta));
  const Vec4& v = out.eig.vectors[0];
  out.q = {v[0], v[1], v[2], v[3]};
  out.degenerate = out.eig.values[1] - out.eig.values[0] < 1e-9;
  return out;
}

Vec10 qcqp_backward(const Vec10& theta, const QcqpOutput& out, const Vec4& grad_q) {
  if (out.degenerate)
    throw DegenerateRepresentation(
        "qcqp_backward: minimum eigenvalue not separated, gradient undefined");
  const Vec4 q{out.q.w, out.q.x, out.q.y, out.q.z};
  // w = sum_{k>0} (g . v_k) / (l0 - lk) v_k; grad_A = w q^T
  Vec4 w{};
  for (int k = 1; k < 4; ++k) {
    const Vec4& v = out.eig.vectors[k];
    double gv = grad_q[0] * v[0] + grad_q[1] * v[1] + grad_q[2] * v[2] + grad_q[3] * v[3];
    double denom = out.eig.values[0] - out.eig.values[k];
    for (int i = 0; i < 4; ++i) w[i] += v[i] * gv / denom;
  }
  // grad_L = (grad_A + grad_A^T) L restricted to the factor's support
  Mat4 s{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s[i * 4 + j] = w[i] * q[j] + w[j] * q[i];
  Mat4 l = build_l(theta);
  Mat4 gl{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double acc = 0;
      for (int k = 0; k < 4; ++k) acc += s[i * 4 + k] * l[k * 4 + j];
      gl[i * 4 + j] = acc;
    }
  return {gl[0], gl[1], gl[2], gl[3], gl[15], gl[5], gl[6], gl[7], gl[11], gl[10]};
}

}  // namespace ofm
