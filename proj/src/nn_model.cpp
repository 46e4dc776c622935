#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "config_json.hpp"
#include "ofm/common.hpp"
#include "ofm/loss_schedule.hpp"
#include "ofm/nn.hpp"
#include "ofm/nn_layers.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace ofm {

std::string head_kind_name(HeadKind k) {
  switch (k) {
    case HeadKind::Quat: return "quat";
    case HeadKind::SixD: return "6d";
    case HeadKind::Qcqp: return "qcqp";
  }
  throw std::invalid_argument("head_kind_name: bad enum");
}

HeadKind head_kind_from_name(const std::string& s) {
  if (s == "quat") return HeadKind::Quat;
  if (s == "6d") return HeadKind::SixD;
  if (s == "qcqp") return HeadKind::Qcqp;
  throw std::invalid_argument("unknown head kind: " + s);
}

std::string pool_kind_name(PoolKind k) {
  switch (k) {
    case PoolKind::Gem: return "gem";
    case PoolKind::GlobalMax: return "max";
    case PoolKind::MaxPlusAvg: return "max_plus_avg";
  }
  throw std::invalid_argument("pool_kind_name: bad enum");
}

PoolKind pool_kind_from_name(const std::string& s) {
  if (s == "gem") return PoolKind::Gem;
  if (s == "max") return PoolKind::GlobalMax;
  if (s == "max_plus_avg") return PoolKind::MaxPlusAvg;
  throw std::invalid_argument("unknown pool kind: " + s);
}

std::string act_kind_name(ActKind k) {
  switch (k) {
    case ActKind::PReLU: return "prelu";
    case ActKind::ReLU: return "relu";
  }
  throw std::invalid_argument("act_kind_name: bad enum");
}

ActKind act_kind_from_name(const std::string& s) {
  if (s == "prelu") return ActKind::PReLU;
  if (s == "relu") return ActKind::ReLU;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string train_style_name(TrainStyle s) {
  switch (s) {
    case TrainStyle::Single: return "single";
    case TrainStyle::Siamese: return "siamese";
    case TrainStyle::SiameseAux: return "siamese_aux";
  }
  throw std::invalid_argument("train_style_name: bad enum");
}

TrainStyle train_style_from_name(const std::string& s) {
  if (s == "single") return TrainStyle::Single;
  if (s == "siamese") return TrainStyle::Siamese;
  if (s == "siamese_aux") return TrainStyle::SiameseAux;
  throw std::invalid_argument("unknown train style: " + s);
}

int head_arity(HeadKind k) {
  switch (k) {
    case HeadKind::Quat: return 4;
    case HeadKind::SixD: return 6;
    case HeadKind::Qcqp: return 10;
  }
  throw std::invalid_argument("head_arity: bad enum");
}

EncoderConfig EncoderConfig::desk() {
  EncoderConfig c;
  c.input_side = 48;
  c.blur = BlurMode::Gaussian;
  c.blur_filters = 3;
  c.blocks = {{5, 16, 1, true}, {3, 32, 1, true}, {3, 64, 1, true}, {3, 128, 1, true}};
  c.pool = PoolKind::Gem;
  c.head = HeadKind::Qcqp;
  // At this scale and horizon, dropout's train/eval variance shift through
  // the following batch norms dominates any regularization benefit, and
  // weight decay starves the short schedule; both stay off.
  c.dropout = 0.0;
  c.l2 = 0.0;
  return c;
}

EncoderConfig EncoderConfig::reference128() {
  EncoderConfig c;
  c.input_side = 128;
  c.blur = BlurMode::Gaussian;
  c.blur_filters = 6;
  c.blocks = {{7, 32, 1, true},   {5, 64, 1, true},   {3, 128, 2, true},
              {3, 256, 2, true},  {3, 512, 2, true},  {3, 1024, 2, true}};
  c.pool = PoolKind::Gem;
  c.head = HeadKind::Qcqp;
  return c;
}

int input_channels(const EncoderConfig& cfg) {
  return cfg.blur == BlurMode::None ? 1 : cfg.blur_filters;
}

std::vector<Param*> Model::params() {
  std::vector<Param*> out;
  for (auto& l : layers)
    for (Param* p : l->params()) out.push_back(p);
  return out;
}

std::vector<const Param*> Model::params() const {
  std::vector<const Param*> out;
  for (auto& l : layers)
    for (Param* p : const_cast<Layer*>(l.get())->params()) out.push_back(p);
  return out;
}

long Model::param_count() const {
  long n = 0;
  for (const Param* p : params()) n += static_cast<long>(p->v.size());
  return n;
}

void Model::zero_grads() {
  for (Param* p : params()) std::fill(p->g.begin(), p->g.end(), 0.0);
}

void Model::begin_step() {
  for (auto& l : layers) l->begin_step();
}

Tensor Model::forward_raw(const Tensor& batch, std::vector<std::unique_ptr<LayerCtx>>& ctxs,
                          bool train, Rng* rng) {
  require(batch.shape.size() == 4 && batch.dim(1) == input_channels(cfg) &&
              batch.dim(2) == cfg.input_side && batch.dim(3) == cfg.input_side,
          "forward: batch shape does not match the config");
  ctxs.clear();
  ctxs.resize(layers.size());
  Tensor x = batch;
  for (size_t i = 0; i < layers.size(); ++i) x = layers[i]->forward(x, ctxs[i], train, rng);
  return x;
}

Tensor Model::backward_raw(const Tensor& g_raw, std::vector<std::unique_ptr<LayerCtx>>& ctxs) {
  require(ctxs.size() == layers.size(), "backward: run forward first");
  static LayerCtx no_ctx;
  Tensor g = g_raw;
  for (size_t i = layers.size(); i-- > 0;)
    g = layers[i]->backward(g, ctxs[i] ? *ctxs[i] : no_ctx);
  return g;
}

Model build_encoder(const EncoderConfig& cfg, uint64_t seed) {
  require(!cfg.blocks.empty(), "build_encoder: need at least one conv block");
  require(cfg.input_side >= 4, "build_encoder: input side too small");
  Model m;
  m.cfg = cfg;
  m.init_seed = seed;
  Rng rng(mix_seed(seed, 7001));

  auto he_fill = [&rng](Param& w, int fan_in) {
    const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : w.v) v = rng.gaussian() * sigma;
  };

  int ch = input_channels(cfg);
  int side = cfg.input_side;
  for (size_t b = 0; b < cfg.blocks.size(); ++b) {
    const ConvBlock& blk = cfg.blocks[b];
    require(blk.n_convs >= 1 && blk.channels >= 1, "build_encoder: bad block");
    const std::string bp = "b" + std::to_string(b + 1) + ".";
    for (int j = 0; j < blk.n_convs; ++j) {
      const std::string sfx = std::to_string(j + 1);
      auto conv = std::make_unique<Conv2d>(bp + "conv" + sfx, ch, blk.channels, blk.kernel);
      he_fill(conv->w_, ch * blk.kernel * blk.kernel);
      m.layers.push_back(std::move(conv));
      ch = blk.channels;
      m.layers.push_back(std::make_unique<BatchNorm2d>(bp + "bn" + sfx, ch));
      if (cfg.act == ActKind::PReLU)
        m.layers.push_back(std::make_unique<PRelu>(bp + "act" + sfx, ch, cfg.prelu_alpha_init));
      else
        m.layers.push_back(std::make_unique<Relu>(bp + "act" + sfx));
    }
    if (blk.pool) {
      require(side >= 2, "build_encoder: spatial extent exhausted before the last pool");
      m.layers.push_back(std::make_unique<MaxPool2>(bp + "pool"));
      side /= 2;
      if (cfg.dropout > 0.0)
        m.layers.push_back(std::make_unique<Dropout>(bp + "drop", cfg.dropout));
    }
  }
  switch (cfg.pool) {
    case PoolKind::Gem:
      m.layers.push_back(std::make_unique<GemPool>("gem", cfg.gem_p_init));
      break;
    case PoolKind::GlobalMax:
      m.layers.push_back(std::make_unique<GlobalMaxPool>("gpool"));
      break;
    case PoolKind::MaxPlusAvg:
      m.layers.push_back(std::make_unique<MaxPlusAvgPool>("gpool"));
      break;
  }
  auto fc = std::make_unique<Dense>("fc", ch, head_arity(cfg.head));
  he_fill(fc->w_, ch);
  m.layers.push_back(std::move(fc));
  return m;
}

HeadOut apply_head(HeadKind kind, const Tensor& raw) {
  require(raw.shape.size() == 2 && raw.dim(1) == head_arity(kind),
          "apply_head: raw width does not match the head");
  const int n = raw.dim(0);
  HeadOut out;
  out.q.resize(static_cast<size_t>(n));
  out.degenerate.assign(static_cast<size_t>(n), false);
  if (kind == HeadKind::Qcqp) out.qcqp.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double* r = raw.v.data() + static_cast<size_t>(i) * raw.dim(1);
    switch (kind) {
      case HeadKind::Quat: {
        Vec4 v;
        std::copy(r, r + 4, v.begin());
        out.q[static_cast<size_t>(i)] = head_quat(v);
        break;
      }
      case HeadKind::SixD: {
        Vec6 v;
        std::copy(r, r + 6, v.begin());
        out.q[static_cast<size_t>(i)] = head_6d(v);
        break;
      }
      case HeadKind::Qcqp: {
        Vec10 v;
        std::copy(r, r + 10, v.begin());
        QcqpOutput o = qcqp_forward(v);
        out.q[static_cast<size_t>(i)] = o.q;
        out.degenerate[static_cast<size_t>(i)] = o.degenerate;
        out.qcqp[static_cast<size_t>(i)] = o;
        break;
      }
    }
  }
  return out;
}

Tensor head_backward(HeadKind kind, const Tensor& raw, const HeadOut& out,
                     const std::vector<Vec4>& grad_q) {
  const int n = raw.dim(0), k = raw.dim(1);
  require(static_cast<int>(grad_q.size()) == n, "head_backward: grad count mismatch");
  Tensor g = Tensor::zeros(raw.shape);
  for (int i = 0; i < n; ++i) {
    const double* r = raw.v.data() + static_cast<size_t>(i) * k;
    double* gr = g.v.data() + static_cast<size_t>(i) * k;
    switch (kind) {
      case HeadKind::Quat: {
        Vec4 v;
        std::copy(r, r + 4, v.begin());
        Vec4 gv = head_quat_backward(v, grad_q[static_cast<size_t>(i)]);
        std::copy(gv.begin(), gv.end(), gr);
        break;
      }
      case HeadKind::SixD: {
        Vec6 v;
        std::copy(r, r + 6, v.begin());
        Vec6 gv = head_6d_backward(v, grad_q[static_cast<size_t>(i)]);
        std::copy(gv.begin(), gv.end(), gr);
        break;
      }
      case HeadKind::Qcqp: {
        if (out.degenerate[static_cast<size_t>(i)]) break;  // unstable pose: skip the row
        Vec10 v;
        std::copy(r, r + 10, v.begin());
        Vec10 gv = qcqp_backward(v, out.qcqp[static_cast<size_t>(i)],
                                 grad_q[static_cast<size_t>(i)]);
        std::copy(gv.begin(), gv.end(), gr);
        break;
      }
    }
  }
  return g;
}

Tensor make_input_batch(const std::vector<MultiChannel>& cache, const std::vector<int>& idx) {
  require(!cache.empty() && !idx.empty(), "make_input_batch: empty input");
  const int c = cache[0].channels, s = cache[0].side;
  Tensor batch = Tensor::zeros({static_cast<int>(idx.size()), c, s, s});
  const size_t plane = static_cast<size_t>(c) * s * s;
  for (size_t n = 0; n < idx.size(); ++n) {
    const int j = idx[n];
    require(j >= 0 && j < static_cast<int>(cache.size()), "make_input_batch: index out of range");
    require(cache[static_cast<size_t>(j)].channels == c && cache[static_cast<size_t>(j)].side == s,
            "make_input_batch: ragged cache");
    std::copy(cache[static_cast<size_t>(j)].data.begin(),
              cache[static_cast<size_t>(j)].data.end(), batch.v.begin() + n * plane);
  }
  return batch;
}

std::vector<MultiChannel> blur_cache(const std::vector<Image>& images, BlurMode mode,
                                     int n_filters) {
  std::vector<MultiChannel> out(images.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < static_cast<long>(images.size()); ++i)
    out[static_cast<size_t>(i)] = blur_bank(images[static_cast<size_t>(i)], mode, n_filters);
  return out;
}

void save_model(const std::string& path, const Model& m) {
  nlohmann::json names = nlohmann::json::array();
  for (const Param* p : m.params())
    names.push_back({{"name", p->name}, {"shape", p->shape}});
  nlohmann::json header = {{"version", 1},
                           {"seed", m.init_seed},
                           {"config", to_json(m.cfg)},
                           {"params", names}};
  const std::string hs = header.dump();
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "save_model: cannot open output file");
  f.write("OFM1", 4);
  const uint64_t len = hs.size();
  f.write(reinterpret_cast<const char*>(&len), 8);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const Param* p : m.params())
    f.write(reinterpret_cast<const char*>(p->v.data()),
            static_cast<std::streamsize>(p->v.size() * sizeof(double)));
  f.close();
  if (!f.good()) throw std::runtime_error("save_model: write failed: " + path);
}

Model load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f.good()) throw std::runtime_error("load_model: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f.good() || std::memcmp(magic, "OFM1", 4) != 0)
    throw std::runtime_error("load_model: not an OFM1 file: " + path);
  uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 8);
  if (!f.good() || len == 0 || len > (1ull << 30))
    throw std::runtime_error("load_model: corrupt header length");
  std::string hs(len, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(len));
  if (!f.good()) throw std::runtime_error("load_model: truncated header");
  nlohmann::json header = nlohmann::json::parse(hs);

  Model m = build_encoder(encoder_config_from_json(header.at("config")),
                          header.at("seed").get<uint64_t>());
  const auto& names = header.at("params");
  std::vector<Param*> ps = m.params();
  if (names.size() != ps.size())
    throw std::runtime_error("load_model: param list does not match the config");
  for (size_t i = 0; i < ps.size(); ++i) {
    if (names[i].at("name").get<std::string>() != ps[i]->name ||
        names[i].at("shape").get<std::vector<int>>() != ps[i]->shape)
      throw std::runtime_error("load_model: param mismatch at " + ps[i]->name);
    f.read(reinterpret_cast<char*>(ps[i]->v.data()),
           static_cast<std::streamsize>(ps[i]->v.size() * sizeof(double)));
    if (!f.good()) throw std::runtime_error("load_model: truncated block " + ps[i]->name);
  }
  return m;
}

namespace {

// Loss used by the per-layer finite-difference check: a fixed random
// projection of the layer output.
double projected_loss(Layer& l, const Tensor& x, const std::vector<double>& wout,
                      bool train) {
  std::unique_ptr<LayerCtx> ctx;
  Tensor y = l.forward(x, ctx, train, nullptr);
  double s = 0.0;
  for (size_t i = 0; i < y.v.size(); ++i) s += wout[i] * y.v[i];
  return s;
}

double rel_err(double a, double n) {
  return std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1.0});
}

GradCheckRow check_one_layer(const std::string& tag, Layer& l, Tensor x, bool train,
                             Rng& rng, double threshold) {
  std::unique_ptr<LayerCtx> ctx;
  Tensor y0 = l.forward(x, ctx, train, &rng);  // sizes the projection, draws masks
  std::vector<double> wout(y0.v.size());
  for (double& w : wout) w = rng.gaussian();

  for (Param* p : l.params()) std::fill(p->g.begin(), p->g.end(), 0.0);
  std::unique_ptr<LayerCtx> ctx2;
  Tensor y = l.forward(x, ctx2, train, nullptr);
  Tensor gy = Tensor::zeros(y.shape);
  gy.v = wout;
  static LayerCtx no_ctx;
  Tensor dxa = l.backward(gy, ctx2 ? *ctx2 : no_ctx);

  GradCheckRow row{tag, 0.0, threshold};
  auto probe = [&](double& v, double analytic) {
    const double h = 1e-5 * std::max(1.0, std::fabs(v));
    const double keep = v;
    v = keep + h;
    const double lp = projected_loss(l, x, wout, train);
    v = keep - h;
    const double lm = projected_loss(l, x, wout, train);
    v = keep;
    row.max_rel_err = std::max(row.max_rel_err, rel_err(analytic, (lp - lm) / (2 * h)));
  };
  for (size_t i = 0; i < x.v.size(); ++i) probe(x.v[i], dxa.v[i]);
  for (Param* p : l.params()) {
    if (!p->trainable) continue;
    for (size_t i = 0; i < p->v.size(); ++i) probe(p->v[i], p->g[i]);
  }
  return row;
}

Tensor gauss_tensor(std::vector<int> shape, Rng& rng, double scale, double keep_away) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.v) {
    v = rng.gaussian() * scale;
    // nudge values off the activation kinks so central differences stay valid
    if (keep_away > 0 && std::fabs(v) < keep_away) v += (v >= 0 ? 1 : -1) * 2 * keep_away;
  }
  return t;
}

}  // namespace

std::vector<GradCheckRow> gradient_check_layers(uint64_t seed) {
  Rng rng(mix_seed(seed, 4242));
  std::vector<GradCheckRow> rows;
  const double th = 1e-4;

  {
    Conv2d l("conv", 2, 3, 3);
    for (double& v : l.w_.v) v = rng.gaussian() * 0.5;
    for (double& v : l.b_.v) v = rng.gaussian() * 0.1;
    rows.push_back(check_one_layer("conv2d", l, gauss_tensor({2, 2, 6, 6}, rng, 1.0, 0), true,
                                   rng, th));
  }
  {
    BatchNorm2d l("bn", 3);
    for (double& v : l.gamma_.v) v = 1.0 + rng.gaussian() * 0.2;
    for (double& v : l.beta_.v) v = rng.gaussian() * 0.2;
    rows.push_back(check_one_layer("batch_norm", l, gauss_tensor({2, 3, 5, 5}, rng, 1.0, 0),
                                   true, rng, th));
  }
  {
    PRelu l("act", 3, 0.25);
    rows.push_back(check_one_layer("prelu", l, gauss_tensor({2, 3, 5, 5}, rng, 1.0, 1e-3),
                                   true, rng, th));
  }
  {
    Relu l("act");
    rows.push_back(check_one_layer("relu", l, gauss_tensor({2, 3, 5, 5}, rng, 1.0, 1e-3), true,
                                   rng, th));
  }
  {
    MaxPool2 l("pool");
    rows.push_back(check_one_layer("max_pool", l, gauss_tensor({2, 3, 6, 6}, rng, 1.0, 0),
                                   true, rng, th));
  }
  {
    Dropout l("drop", 0.3);
    rows.push_back(check_one_layer("dropout", l, gauss_tensor({2, 3, 5, 5}, rng, 1.0, 0), true,
                                   rng, th));
  }
  {
    GemPool l("gem", 2.5);
    Tensor x = gauss_tensor({2, 3, 5, 5}, rng, 1.0, 0);
    for (double& v : x.v) v = 0.05 + std::fabs(v);  // clear of the 1e-6 floor
    rows.push_back(check_one_layer("gem_pool", l, std::move(x), true, rng, th));
  }
  {
    GlobalMaxPool l("gpool");
    rows.push_back(check_one_layer("global_max", l, gauss_tensor({2, 3, 5, 5}, rng, 1.0, 0),
                                   true, rng, th));
  }
  {
    MaxPlusAvgPool l("gpool");
    rows.push_back(check_one_layer("max_plus_avg", l, gauss_tensor({2, 3, 5, 5}, rng, 1.0, 0),
                                   true, rng, th));
  }
  {
    Dense l("fc", 7, 5);
    for (double& v : l.w_.v) v = rng.gaussian() * 0.5;
    for (double& v : l.b_.v) v = rng.gaussian() * 0.1;
    rows.push_back(check_one_layer("dense", l, gauss_tensor({3, 7}, rng, 1.0, 0), true, rng,
                                   th));
  }
  return rows;
}

double gradient_check_end_to_end(uint64_t seed, int n_probes) {
  EncoderConfig cfg;
  cfg.input_side = 8;
  cfg.blur = BlurMode::None;
  cfg.blur_filters = 1;
  cfg.blocks = {{3, 4, 1, true}, {3, 6, 1, true}};
  cfg.pool = PoolKind::Gem;
  cfg.head = HeadKind::Qcqp;
  cfg.dropout = 0.3;
  Model m = build_encoder(cfg, mix_seed(seed, 11));

  Rng rng(mix_seed(seed, 12));
  const int n = 4, npair = 2;
  Tensor batch = gauss_tensor({n, 1, 8, 8}, rng, 1.0, 0);
  std::vector<Quat> truth(static_cast<size_t>(n));
  for (Quat& q : truth) q = sample_uniform_rotation(rng);
  const CurriculumWeights w{0.5, 0.5};

  auto loss_eval = [&]() {
    std::vector<std::unique_ptr<LayerCtx>> ctxs;
    Tensor raw = m.forward_raw(batch, ctxs, true, nullptr);
    HeadOut ho = apply_head(cfg.head, raw);
    std::vector<PairTerm> terms = {{ho.q[0], ho.q[1], truth[0], truth[1]},
                                   {ho.q[2], ho.q[3], truth[2], truth[3]}};
    return full_loss(terms, w);
  };

  m.begin_step();
  m.zero_grads();
  std::vector<std::unique_ptr<LayerCtx>> ctxs;
  Tensor raw = m.forward_raw(batch, ctxs, true, &rng);  // draws this step's dropout masks
  HeadOut ho = apply_head(cfg.head, raw);
  for (bool d : ho.degenerate)
    require(!d, "gradient_check_end_to_end: degenerate head sample; use another seed");

  std::vector<Vec4> grad_q(static_cast<size_t>(n), Vec4{0, 0, 0, 0});
  for (int p = 0; p < npair; ++p) {
    const int i = 2 * p, j = 2 * p + 1;
    const Vec4 ri = regression_loss_grad(ho.q[static_cast<size_t>(i)], truth[static_cast<size_t>(i)]);
    const Vec4 rj = regression_loss_grad(ho.q[static_cast<size_t>(j)], truth[static_cast<size_t>(j)]);
    const PairGrad pg = distance_loss_grad(ho.q[static_cast<size_t>(i)], ho.q[static_cast<size_t>(j)],
                                           truth[static_cast<size_t>(i)], truth[static_cast<size_t>(j)]);
    for (int k = 0; k < 4; ++k) {
      grad_q[static_cast<size_t>(i)][static_cast<size_t>(k)] +=
          (w.beta1 * ri[static_cast<size_t>(k)] + w.beta2 * pg.gi[static_cast<size_t>(k)]) / npair;
      grad_q[static_cast<size_t>(j)][static_cast<size_t>(k)] +=
          (w.beta1 * rj[static_cast<size_t>(k)] + w.beta2 * pg.gj[static_cast<size_t>(k)]) / npair;
    }
  }
  Tensor g_raw = head_backward(cfg.head, raw, ho, grad_q);
  m.backward_raw(g_raw, ctxs);

  // Probe coordinates carrying real gradient; tiny ones only test noise.
  struct Coord {
    Param* p;
    size_t i;
  };
  std::vector<Coord> coords;
  double gmax = 0.0;
  for (Param* p : m.params()) {
    if (!p->trainable) continue;
    for (size_t i = 0; i < p->v.size(); ++i) gmax = std::max(gmax, std::fabs(p->g[i]));
  }
  for (Param* p : m.params()) {
    if (!p->trainable) continue;
    for (size_t i = 0; i < p->v.size(); ++i)
      if (std::fabs(p->g[i]) > 0.05 * gmax) coords.push_back({p, i});
  }
  require(!coords.empty(), "gradient_check_end_to_end: no gradient flow");
  rng.shuffle(coords);
  if (static_cast<int>(coords.size()) > n_probes) coords.resize(static_cast<size_t>(n_probes));

  double worst = 0.0;
  for (const Coord& c : coords) {
    double& v = c.p->v[c.i];
    const double h = 1e-5 * std::max(1.0, std::fabs(v));
    const double keep = v;
    v = keep + h;
    const double lp = loss_eval();
    v = keep - h;
    const double lm = loss_eval();
    v = keep;
    const double num = (lp - lm) / (2 * h);
    const double a = c.p->g[c.i];
    worst = std::max(worst, std::fabs(a - num) / std::max({std::fabs(a), std::fabs(num), 1e-6}));
  }
  return worst;
}

}  // namespace ofm
