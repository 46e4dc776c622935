#include "ofm/nn_layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "ofm/common.hpp"

namespace ofm {

Tensor Tensor::zeros(std::vector<int> s) {
  Tensor t;
  t.shape = std::move(s);
  long n = 1;
  for (int d : t.shape) n *= d;
  t.v.assign(static_cast<size_t>(n), 0.0);
  return t;
}

namespace {

struct XCtx : LayerCtx {
  Tensor x;
};

struct BnCtx : LayerCtx {
  Tensor xhat;
  std::vector<double> ivar;
  long m = 0;
};

struct ArgCtx : LayerCtx {
  std::vector<long> arg;        // flat input offset feeding each output
  std::vector<int> in_shape;
};

struct GemCtx : LayerCtx {
  Tensor x;
  std::vector<double> m;  // per (n,c) mean of clamped x^p
  std::vector<double> f;  // per (n,c) output
};

struct MaxAvgCtx : LayerCtx {
  std::vector<long> arg;
  std::vector<int> in_shape;
};

void init_param(Param& p, std::string name, std::vector<int> shape, double fill,
                bool decay, bool trainable) {
  p.name = std::move(name);
  p.shape = std::move(shape);
  long n = 1;
  for (int d : p.shape) n *= d;
  p.v.assign(static_cast<size_t>(n), fill);
  p.g.assign(static_cast<size_t>(n), 0.0);
  p.decay = decay;
  p.trainable = trainable;
}

}  // namespace

Conv2d::Conv2d(std::string name, int in_c, int out_c, int kernel)
    : name_(std::move(name)), in_c_(in_c), out_c_(out_c), k_(kernel) {
  require(kernel >= 1 && kernel % 2 == 1, "conv2d: kernel must be odd for same padding");
  require(in_c >= 1 && out_c >= 1, "conv2d: channel counts must be positive");
  init_param(w_, name_ + ".w", {out_c, in_c, kernel, kernel}, 0.0, true, true);
  init_param(b_, name_ + ".b", {out_c}, 0.0, false, true);
}

Tensor Conv2d::forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool, Rng*) {
  require(x.shape.size() == 4 && x.dim(1) == in_c_, "conv2d: input shape mismatch");
  const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
  const int K = k_, P = k_ / 2;
  Tensor y = Tensor::zeros({N, out_c_, H, W});
  const double* __restrict xv = x.v.data();
  const double* __restrict wv = w_.v.data();
  double* __restrict yv = y.v.data();
#pragma omp parallel for schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int oc = 0; oc < out_c_; ++oc) {
      double* yc = yv + (static_cast<size_t>(n) * out_c_ + oc) * H * W;
      const double bias = b_.v[static_cast<size_t>(oc)];
      for (long i = 0; i < static_cast<long>(H) * W; ++i) yc[i] = bias;
      for (int ic = 0; ic < in_c_; ++ic) {
        const double* xc = xv + (static_cast<size_t>(n) * in_c_ + ic) * H * W;
        const double* wk = wv + (static_cast<size_t>(oc) * in_c_ + ic) * K * K;
        for (int dy = 0; dy < K; ++dy) {
          const int h0 = std::max(0, P - dy), h1 = std::min(H, H + P - dy);
          for (int h = h0; h < h1; ++h) {
            const double* xr = xc + static_cast<size_t>(h + dy - P) * W;
            double* yr = yc + static_cast<size_t>(h) * W;
            for (int dx = 0; dx < K; ++dx) {
              const double wgt = wk[dy * K + dx];
              const int t0 = std::max(0, P - dx), t1 = std::min(W, W + P - dx);
              const double* xs = xr + dx - P;
#pragma GCC ivdep
              for (int t = t0; t < t1; ++t) yr[t] += wgt * xs[t];
            }
          }
        }
      }
    }
  }
  auto c = std::make_unique<XCtx>();
  c->x = x;
  ctx = std::move(c);
  return y;
}

Tensor Conv2d::backward(const Tensor& gy, const LayerCtx& ctx0) {
  const Tensor& x = static_cast<const XCtx&>(ctx0).x;
  const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
  const int K = k_, P = k_ / 2;
  require(gy.shape == std::vector<int>({N, out_c_, H, W}), "conv2d: grad shape mismatch");
  Tensor dx = Tensor::zeros(x.shape);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int oc = 0; oc < out_c_; ++oc) {
      const double* gc = gy.v.data() + (static_cast<size_t>(n) * out_c_ + oc) * H * W;
      for (int ic = 0; ic < in_c_; ++ic) {
        double* dc = dx.v.data() + (static_cast<size_t>(n) * in_c_ + ic) * H * W;
        const double* wk = w_.v.data() + (static_cast<size_t>(oc) * in_c_ + ic) * K * K;
        for (int dy = 0; dy < K; ++dy) {
          const int h0 = std::max(0, P - dy), h1 = std::min(H, H + P - dy);
          for (int h = h0; h < h1; ++h) {
            double* dr = dc + static_cast<size_t>(h + dy - P) * W;
            const double* gr = gc + static_cast<size_t>(h) * W;
            for (int dk = 0; dk < K; ++dk) {
              const double wgt = wk[dy * K + dk];
              const int t0 = std::max(0, P - dk), t1 = std::min(W, W + P - dk);
              double* ds = dr + dk - P;
#pragma GCC ivdep
              for (int t = t0; t < t1; ++t) ds[t] += wgt * gr[t];
            }
          }
        }
      }
    }
  }
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < out_c_; ++oc) {
    double bsum = 0.0;
    for (int n = 0; n < N; ++n) {
      const double* gc = gy.v.data() + (static_cast<size_t>(n) * out_c_ + oc) * H * W;
      for (long i = 0; i < static_cast<long>(H) * W; ++i) bsum += gc[i];
      for (int ic = 0; ic < in_c_; ++ic) {
        const double* xc = x.v.data() + (static_cast<size_t>(n) * in_c_ + ic) * H * W;
        double* wg = w_.g.data() + (static_cast<size_t>(oc) * in_c_ + ic) * K * K;
        for (int dy = 0; dy < K; ++dy) {
          const int h0 = std::max(0, P - dy), h1 = std::min(H, H + P - dy);
          for (int h = h0; h < h1; ++h) {
            const double* xr = xc + static_cast<size_t>(h + dy - P) * W;
            const double* gr = gc + static_cast<size_t>(h) * W;
            for (int dk = 0; dk < K; ++dk) {
              const int t0 = std::max(0, P - dk), t1 = std::min(W, W + P - dk);
              const double* xs = xr + dk - P;
              double s = 0.0;
#pragma GCC ivdep
              for (int t = t0; t < t1; ++t) s += gr[t] * xs[t];
              wg[dy * K + dk] += s;
            }
          }
        }
      }
    }
    b_.g[static_cast<size_t>(oc)] += bsum;
  }
  return dx;
}

BatchNorm2d::BatchNorm2d(std::string name, int channels, double momentum, double eps)
    : name_(std::move(name)), c_(channels), momentum_(momentum), eps_(eps) {
  require(channels >= 1, "batch_norm: channel count must be positive");
  init_param(gamma_, name_ + ".gamma", {channels}, 1.0, false, true);
  init_param(beta_, name_ + ".beta", {channels}, 0.0, false, true);
  init_param(run_mean_, name_ + ".run_mean", {channels}, 0.0, false, false);
  init_param(run_var_, name_ + ".run_var", {channels}, 1.0, false, false);
}

Tensor BatchNorm2d::forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                            Rng*) {
  require(x.shape.size() == 4 && x.dim(1) == c_, "batch_norm: input shape mismatch");
  const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
  const long hw = static_cast<long>(H) * W, m = static_cast<long>(N) * hw;
  Tensor y = Tensor::zeros(x.shape);
  if (train) {
    auto c = std::make_unique<BnCtx>();
    c->xhat = Tensor::zeros(x.shape);
    c->ivar.assign(static_cast<size_t>(c_), 0.0);
    c->m = m;
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c_; ++ch) {
      double mean = 0.0;
      for (int n = 0; n < N; ++n) {
        const double* xc = x.v.data() + (static_cast<size_t>(n) * c_ + ch) * hw;
        for (long i = 0; i < hw; ++i) mean += xc[i];
      }
      mean /= static_cast<double>(m);
      double var = 0.0;
      for (int n = 0; n < N; ++n) {
        const double* xc = x.v.data() + (static_cast<size_t>(n) * c_ + ch) * hw;
        for (long i = 0; i < hw; ++i) var += (xc[i] - mean) * (xc[i] - mean);
      }
      var = std::max(var / static_cast<double>(m), 0.0);
      const double ivar = 1.0 / std::sqrt(var + eps_);
      c->ivar[static_cast<size_t>(ch)] = ivar;
      const double g = gamma_.v[static_cast<size_t>(ch)], b = beta_.v[static_cast<size_t>(ch)];
      for (int n = 0; n < N; ++n) {
        const size_t base = (static_cast<size_t>(n) * c_ + ch) * hw;
        for (long i = 0; i < hw; ++i) {
          const double xh = (x.v[base + i] - mean) * ivar;
          c->xhat.v[base + i] = xh;
          y.v[base + i] = g * xh + b;
        }
      }
      run_mean_.v[static_cast<size_t>(ch)] =
          (1.0 - momentum_) * run_mean_.v[static_cast<size_t>(ch)] + momentum_ * mean;
      run_var_.v[static_cast<size_t>(ch)] =
          (1.0 - momentum_) * run_var_.v[static_cast<size_t>(ch)] + momentum_ * var;
    }
    ctx = std::move(c);
  } else {
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c_; ++ch) {
      const double mean = run_mean_.v[static_cast<size_t>(ch)];
      const double ivar = 1.0 / std::sqrt(run_var_.v[static_cast<size_t>(ch)] + eps_);
      const double g = gamma_.v[static_cast<size_t>(ch)], b = beta_.v[static_cast<size_t>(ch)];
      for (int n = 0; n < N; ++n) {
        const size_t base = (static_cast<size_t>(n) * c_ + ch) * hw;
        for (long i = 0; i < hw; ++i) y.v[base + i] = g * (x.v[base + i] - mean) * ivar + b;
      }
    }
    ctx.reset();
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& gy, const LayerCtx& ctx0) {
  const auto& c = static_cast<const BnCtx&>(ctx0);
  const int N = gy.dim(0), H = gy.dim(2), W = gy.dim(3);
  const long hw = static_cast<long>(H) * W;
  const double m = static_cast<double>(c.m);
  Tensor dx = Tensor::zeros(gy.shape);
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c_; ++ch) {
    double dg = 0.0, db = 0.0;
    for (int n = 0; n < N; ++n) {
      const size_t base = (static_cast<size_t>(n) * c_ + ch) * hw;
      for (long i = 0; i < hw; ++i) {
        dg += gy.v[base + i] * c.xhat.v[base + i];
        db += gy.v[base + i];
      }
    }
    gamma_.g[static_cast<size_t>(ch)] += dg;
    beta_.g[static_cast<size_t>(ch)] += db;
    const double scale = gamma_.v[static_cast<size_t>(ch)] * c.ivar[static_cast<size_t>(ch)] / m;
    for (int n = 0; n < N; ++n) {
      const size_t base = (static_cast<size_t>(n) * c_ + ch) * hw;
      for (long i = 0; i < hw; ++i)
        dx.v[base + i] = scale * (m * gy.v[base + i] - c.xhat.v[base + i] * dg - db);
    }
  }
  return dx;
}

PRelu::PRelu(std::string name, int channels, double alpha_init)
    : name_(std::move(name)), c_(channels) {
  require(channels >= 1, "prelu: channel count must be positive");
  init_param(alpha_, name_ + ".alpha", {channels}, alpha_init, false, true);
}

Tensor PRelu::forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool, Rng*) {
  require(x.shape.size() == 4 && x.dim(1) == c_, "prelu: input shape mismatch");
  const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
  const long hw = static_cast<long>(H) * W;
  Tensor y = Tensor::zeros(x.shape);
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c_; ++ch) {
    const double a = alpha_.v[static_cast<size_t>(ch)];
    for (int n = 0; n < N; ++n) {
      const size_t base = (static_cast<size_t>(n) * c_ + ch) * hw;
      for (long i = 0; i < hw; ++i) {
        const double xi = x.v[base + i];
        y.v[base + i] = xi > 0 ? xi : a * xi;
      }
    }
  }
  auto c = std::make_unique<XCtx>();
  c->x = x;
  ctx = std::move(c);
  return y;
}

Tensor PRelu::backward(const Tensor& gy, const LayerCtx& ctx0) {
  const Tensor& x = static_cast<const XCtx&>(ctx0).x;
  const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
  const long hw = static_cast<long>(H) * W;
  Tensor dx = Tensor::zeros(x.shape);
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c_; ++ch) {
    const double a = alpha_.v[static_cast<size_t>(ch)];
    double da = 0.0;
    for (int n = 0; n < N; ++n) {
      const size_t base = (static_cast<size_t>(n) * c_ + ch) * hw;
      for (long i = 0; i < hw; ++i) {
        const double xi = x.v[base + i], g = gy.v[base + i];
        if (xi > 0) {
          dx.v[base + i] = g;
        } else {
          dx.v[base + i] = a * g;
          da += g * xi;
        }
      }
    }
    alpha_.g[static_cast<size_t>(ch)] += da;
  }
  return dx;
}

Tensor Relu::forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool, Rng*) {
  Tensor y = x;
  for (double& v : y.v) v = v > 0 ? v : 0.0;
  auto c = std::make_unique<XCtx>();
  c->x = x;
  ctx = std::move(c);
  return y;
}

Tensor Relu::backward(const Tensor& gy, const LayerCtx& ctx0) {
  const Tensor& x = static_cast<const XCtx&>(ctx0).x;
  Tensor dx = gy;
  for (size_t i = 0; i < dx.v.size(); ++i)
    if (x.v[i] <= 0) dx.v[i] = 0.0;
  return dx;
}

Tensor MaxPool2::forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool, Rng*) {
  require(x.shape.size() == 4 && x.dim(2) >= 2 && x.dim(3) >= 2,
          "max_pool: input too small");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int OH = H / 2, OW = W / 2;
  Tensor y = Tensor::zeros({N, C, OH, OW});
  auto c = std::make_unique<ArgCtx>();
  c->arg.assign(y.v.size(), 0);
  c->in_shape = x.shape;
#pragma omp parallel for schedule(static)
  for (long nc = 0; nc < static_cast<long>(N) * C; ++nc) {
    const double* xc = x.v.data() + static_cast<size_t>(nc) * H * W;
    double* yc = y.v.data() + static_cast<size_t>(nc) * OH * OW;
    long* ac = c->arg.data() + static_cast<size_t>(nc) * OH * OW;
    for (int oh = 0; oh < OH; ++oh)
      for (int ow = 0; ow < OW; ++ow) {
        long best = static_cast<long>(2 * oh) * W + 2 * ow;
        double bv = xc[best];
        const long cands[3] = {best + 1, best + W, best + W + 1};
        for (long cd : cands)
          if (xc[cd] > bv) {
            bv = xc[cd];
            best = cd;
          }
        yc[static_cast<size_t>(oh) * OW + ow] = bv;
        ac[static_cast<size_t>(oh) * OW + ow] = static_cast<long>(nc) * H * W + best;
      }
  }
  ctx = std::move(c);
  return y;
}

Tensor MaxPool2::backward(const Tensor& gy, const LayerCtx& ctx0) {
  const auto& c = static_cast<const ArgCtx&>(ctx0);
  Tensor dx = Tensor::zeros(c.in_shape);
  for (size_t i = 0; i < gy.v.size(); ++i) dx.v[static_cast<size_t>(c.arg[i])] += gy.v[i];
  return dx;
}

Dropout::Dropout(std::string name, double rate) : name_(std::move(name)), rate_(rate) {
  require(rate >= 0.0 && rate < 1.0, "dropout: rate must lie in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                        Rng* rng) {
  ctx.reset();
  if (!train || rate_ == 0.0) return x;
  if (fresh_) {
    require(rng != nullptr, "dropout: first forward of a step needs an rng");
    mask_.resize(x.v.size());
    const double keep = 1.0 / (1.0 - rate_);
    for (double& mv : mask_) mv = rng->uniform() < rate_ ? 0.0 : keep;
    fresh_ = false;
  }
  require(mask_.size() == x.v.size(), "dropout: branch shapes differ within a step");
  Tensor y = x;
  for (size_t i = 0; i < y.v.size(); ++i) y.v[i] *= mask_[i];
  return y;
}

Tensor Dropout::backward(const Tensor& gy, const LayerCtx&) {
  if (rate_ == 0.0) return gy;
  require(mask_.size() == gy.v.size(), "dropout: grad shape mismatch");
  Tensor dx = gy;
  for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= mask_[i];
  return dx;
}

GemPool::GemPool(std::string name, double p_init) : name_(std::move(name)) {
  init_param(p_, name_ + ".p", {1}, p_init, false, true);
}

Tensor GemPool::forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool, Rng*) {
  require(x.shape.size() == 4, "gem_pool: expects a spatial input");
  const double p = p_.v[0];
  require(p > 0.0, "gem_pool: p must be positive");
  const int N = x.dim(0), C = x.dim(1);
  const long S = static_cast<long>(x.dim(2)) * x.dim(3);
  Tensor y = Tensor::zeros({N, C});
  auto c = std::make_unique<GemCtx>();
  c->x = x;
  c->m.assign(y.v.size(), 0.0);
  c->f.assign(y.v.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (long nc = 0; nc < static_cast<long>(N) * C; ++nc) {
    const double* xc = x.v.data() + static_cast<size_t>(nc) * S;
    double acc = 0.0;
    for (long i = 0; i < S; ++i) acc += std::pow(std::max(xc[i], 1e-6), p);
    const double m = acc / static_cast<double>(S);
    const double f = std::pow(m, 1.0 / p);
    c->m[static_cast<size_t>(nc)] = m;
    c->f[static_cast<size_t>(nc)] = f;
    y.v[static_cast<size_t>(nc)] = f;
  }
  ctx = std::move(c);
  return y;
}

Tensor GemPool::backward(const Tensor& gy, const LayerCtx& ctx0) {
  const auto& c = static_cast<const GemCtx&>(ctx0);
  const Tensor& x = c.x;
  const double p = p_.v[0];
  const int N = x.dim(0), C = x.dim(1);
  const long S = static_cast<long>(x.dim(2)) * x.dim(3);
  Tensor dx = Tensor::zeros(x.shape);
  double dp = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : dp)
  for (long nc = 0; nc < static_cast<long>(N) * C; ++nc) {
    const double* xc = x.v.data() + static_cast<size_t>(nc) * S;
    double* dc = dx.v.data() + static_cast<size_t>(nc) * S;
    const double g = gy.v[static_cast<size_t>(nc)];
    const double m = c.m[static_cast<size_t>(nc)], f = c.f[static_cast<size_t>(nc)];
    const double scale = f / (m * static_cast<double>(S));
    double plog = 0.0;  // sum of xc^p * ln(xc)
    for (long i = 0; i < S; ++i) {
      const double xcv = std::max(xc[i], 1e-6);
      const double powp = std::pow(xcv, p);
      plog += powp * std::log(xcv);
      if (xc[i] > 1e-6) dc[i] = g * scale * powp / xcv;
    }
    dp += g * f * (-std::log(m) / (p * p) + plog / (static_cast<double>(S) * m * p));
  }
  p_.g[0] += dp;
  return dx;
}

Tensor GlobalMaxPool::forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool, Rng*) {
  require(x.shape.size() == 4, "global_max: expects a spatial input");
  const int N = x.dim(0), C = x.dim(1);
  const long S = static_cast<long>(x.dim(2)) * x.dim(3);
  Tensor y = Tensor::zeros({N, C});
  auto c = std::make_unique<ArgCtx>();
  c->arg.assign(y.v.size(), 0);
  c->in_shape = x.shape;
  for (long nc = 0; nc < static_cast<long>(N) * C; ++nc) {
    const double* xc = x.v.data() + static_cast<size_t>(nc) * S;
    long best = 0;
    for (long i = 1; i < S; ++i)
      if (xc[i] > xc[best]) best = i;
    y.v[static_cast<size_t>(nc)] = xc[best];
    c->arg[static_cast<size_t>(nc)] = nc * S + best;
  }
  ctx = std::move(c);
  return y;
}

Tensor GlobalMaxPool::backward(const Tensor& gy, const LayerCtx& ctx0) {
  const auto& c = static_cast<const ArgCtx&>(ctx0);
  Tensor dx = Tensor::zeros(c.in_shape);
  for (size_t i = 0; i < gy.v.size(); ++i) dx.v[static_cast<size_t>(c.arg[i])] += gy.v[i];
  return dx;
}

Tensor MaxPlusAvgPool::forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool, Rng*) {
  require(x.shape.size() == 4, "max_plus_avg: expects a spatial input");
  const int N = x.dim(0), C = x.dim(1);
  const long S = static_cast<long>(x.dim(2)) * x.dim(3);
  Tensor y = Tensor::zeros({N, C});
  auto c = std::make_unique<MaxAvgCtx>();
  c->arg.assign(y.v.size(), 0);
  c->in_shape = x.shape;
  for (long nc = 0; nc < static_cast<long>(N) * C; ++nc) {
    const double* xc = x.v.data() + static_cast<size_t>(nc) * S;
    long best = 0;
    double sum = xc[0];
    for (long i = 1; i < S; ++i) {
      sum += xc[i];
      if (xc[i] > xc[best]) best = i;
    }
    y.v[static_cast<size_t>(nc)] = xc[best] + sum / static_cast<double>(S);
    c->arg[static_cast<size_t>(nc)] = nc * S + best;
  }
  ctx = std::move(c);
  return y;
}

Tensor MaxPlusAvgPool::backward(const Tensor& gy, const LayerCtx& ctx0) {
  const auto& c = static_cast<const MaxAvgCtx&>(ctx0);
  Tensor dx = Tensor::zeros(c.in_shape);
  const long S = static_cast<long>(c.in_shape[2]) * c.in_shape[3];
  for (size_t i = 0; i < gy.v.size(); ++i) {
    const double g = gy.v[i];
    double* dc = dx.v.data() + i * static_cast<size_t>(S);
    const double ga = g / static_cast<double>(S);
    for (long t = 0; t < S; ++t) dc[t] += ga;
    dx.v[static_cast<size_t>(c.arg[i])] += g;
  }
  return dx;
}

Dense::Dense(std::string name, int in_k, int out_k)
    : name_(std::move(name)), in_k_(in_k), out_k_(out_k) {
  require(in_k >= 1 && out_k >= 1, "dense: dimensions must be positive");
  init_param(w_, name_ + ".w", {out_k, in_k}, 0.0, true, true);
  init_param(b_, name_ + ".b", {out_k}, 0.0, false, true);
}

Tensor Dense::forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool, Rng*) {
  require(x.shape.size() == 2 && x.dim(1) == in_k_, "dense: input shape mismatch");
  const int N = x.dim(0);
  Tensor y = Tensor::zeros({N, out_k_});
#pragma omp parallel for schedule(static)
  for (int n = 0; n < N; ++n) {
    const double* xr = x.v.data() + static_cast<size_t>(n) * in_k_;
    double* yr = y.v.data() + static_cast<size_t>(n) * out_k_;
    for (int o = 0; o < out_k_; ++o) {
      const double* wr = w_.v.data() + static_cast<size_t>(o) * in_k_;
      double s = b_.v[static_cast<size_t>(o)];
#pragma GCC ivdep
      for (int i = 0; i < in_k_; ++i) s += wr[i] * xr[i];
      yr[o] = s;
    }
  }
  auto c = std::make_unique<XCtx>();
  c->x = x;
  ctx = std::move(c);
  return y;
}

Tensor Dense::backward(const Tensor& gy, const LayerCtx& ctx0) {
  const Tensor& x = static_cast<const XCtx&>(ctx0).x;
  const int N = x.dim(0);
  require(gy.shape == std::vector<int>({N, out_k_}), "dense: grad shape mismatch");
  Tensor dx = Tensor::zeros(x.shape);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < N; ++n) {
    const double* gr = gy.v.data() + static_cast<size_t>(n) * out_k_;
    double* dr = dx.v.data() + static_cast<size_t>(n) * in_k_;
    for (int o = 0; o < out_k_; ++o) {
      const double g = gr[o];
      const double* wr = w_.v.data() + static_cast<size_t>(o) * in_k_;
#pragma GCC ivdep
      for (int i = 0; i < in_k_; ++i) dr[i] += g * wr[i];
    }
  }
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out_k_; ++o) {
    double* wg = w_.g.data() + static_cast<size_t>(o) * in_k_;
    double bsum = 0.0;
    for (int n = 0; n < N; ++n) {
      const double g = gy.v[static_cast<size_t>(n) * out_k_ + o];
      bsum += g;
      const double* xr = x.v.data() + static_cast<size_t>(n) * in_k_;
#pragma GCC ivdep
      for (int i = 0; i < in_k_; ++i) wg[i] += g * xr[i];
    }
    b_.g[static_cast<size_t>(o)] += bsum;
  }
  return dx;
}

}  // namespace ofm
