#pragma once

// From-scratch 64-bit reverse-mode network stack: batched tensors, the layer
// set used by the encoder (conv, batch norm, PReLU/ReLU, max-pool, dropout,
// GeM/global pooling, dense), the Siamese encoder builder with HE init, an
// Adam + one-cycle trainer over orientation pairs, inference with optional
// dispersion statistics, and a versioned checkpoint container.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ofm/loss_schedule.hpp"
#include "ofm/rep_heads.hpp"
#include "ofm/rng.hpp"
#include "ofm/sampling.hpp"
#include "ofm/simulator.hpp"
#include "ofm/so3.hpp"
#include "ofm/uncertainty.hpp"

namespace ofm {

// Dense row-major batch tensor, shape (N,C,H,W) for images or (N,K) for
// feature vectors.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  static Tensor zeros(std::vector<int> s);
  long size() const { return static_cast<long>(v.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
};

// Learnable or persistent state block. Optimizer updates trainable params
// only; checkpoints carry every param including batch-norm running stats.
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<double> v, g;
  bool decay = false;      // l2 regularization applies
  bool trainable = true;
};

// Per-branch activation cache so one weight set can serve both Siamese
// branches within a step.
struct LayerCtx {
  virtual ~LayerCtx() = default;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Param*> params() { return {}; }
  // train=true uses batch statistics and dropout; rng may be null when the
  // layer should reuse the masks drawn earlier in the same step.
  virtual Tensor forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                         Rng* rng) = 0;
  // Accumulates into param grads and returns grad w.r.t. the layer input.
  virtual Tensor backward(const Tensor& gy, const LayerCtx& ctx) = 0;
  // Invalidates any per-step cache (dropout masks).
  virtual void begin_step() {}
};

enum class HeadKind { Quat, SixD, Qcqp };
enum class PoolKind { Gem, GlobalMax, MaxPlusAvg };
enum class ActKind { PReLU, ReLU };
enum class TrainStyle { Single, Siamese, SiameseAux };

std::string head_kind_name(HeadKind k);
HeadKind head_kind_from_name(const std::string& s);
std::string pool_kind_name(PoolKind k);
PoolKind pool_kind_from_name(const std::string& s);
std::string act_kind_name(ActKind k);
ActKind act_kind_from_name(const std::string& s);
std::string train_style_name(TrainStyle s);
TrainStyle train_style_from_name(const std::string& s);
int head_arity(HeadKind k);

struct ConvBlock {
  int kernel = 3;
  int channels = 16;
  int n_convs = 1;   // consecutive convs before the pool
  bool pool = true;  // 2x2 max-pool + dropout after the block
};

struct EncoderConfig {
  int input_side = 48;
  BlurMode blur = BlurMode::Gaussian;
  int blur_filters = 3;
  std::vector<ConvBlock> blocks;
  PoolKind pool = PoolKind::Gem;
  double gem_p_init = 3.0;
  ActKind act = ActKind::PReLU;
  double prelu_alpha_init = 0.25;
  HeadKind head = HeadKind::Qcqp;
  double dropout = 0.3;
  double l2 = 0.001;

  // 48-pixel input, 3 blur channels, four single-conv blocks
  // (16,32,64,128), GeM pooling, QCQP head.
  static EncoderConfig desk();
  // 128-pixel input, 6 blur channels, blocks (7,32)(5,64)(3,128)x2
  // (3,256)x2 (3,512)x2 (3,1024)x2, GeM pooling, QCQP head.
  static EncoderConfig reference128();
};

int input_channels(const EncoderConfig& cfg);

class Model {
 public:
  EncoderConfig cfg;
  uint64_t init_seed = 0;
  std::vector<std::unique_ptr<Layer>> layers;

  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  long param_count() const;
  void zero_grads();
  void begin_step();

  // Runs the chain down to the raw head input (N, head_arity). ctxs is
  // resized to the layer count; pass the same vector back into
  // backward_raw.
  Tensor forward_raw(const Tensor& batch, std::vector<std::unique_ptr<LayerCtx>>& ctxs,
                     bool train, Rng* rng);
  Tensor backward_raw(const Tensor& g_raw, std::vector<std::unique_ptr<LayerCtx>>& ctxs);
};

// HE-initialized (fan-in scaled normal) encoder; identical seeds give
// bit-identical weights.
Model build_encoder(const EncoderConfig& cfg, uint64_t seed);

// Per-sample head application on the raw (N, arity) tensor.
struct HeadOut {
  std::vector<Quat> q;
  std::vector<bool> degenerate;       // QCQP eigengap collapse per sample
  std::vector<QcqpOutput> qcqp;       // populated for the Qcqp head only
};
HeadOut apply_head(HeadKind kind, const Tensor& raw);
// Grad of the raw rows given dL/dq per sample; degenerate rows contribute
// zero gradient.
Tensor head_backward(HeadKind kind, const Tensor& raw, const HeadOut& out,
                     const std::vector<Vec4>& grad_q);

// Blur-bank image gather into an (N, C, side, side) batch.
Tensor make_input_batch(const std::vector<MultiChannel>& cache, const std::vector<int>& idx);
std::vector<MultiChannel> blur_cache(const std::vector<Image>& images, BlurMode mode,
                                     int n_filters);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;  // pairs per step (images per step for Single style)
  double lr_max = 2e-3;
  uint64_t seed = 1;
  bool curriculum = true;
  TrainStyle style = TrainStyle::SiameseAux;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int val_pair_count = 256;  // distance-loss probes for the val_loss column
};

struct EpochRow {
  int epoch = 0;
  double train_loss = 0, val_loss = 0;
  double train_med_err = 0, val_med_err = 0;
  double lr = 0;
};

struct History {
  std::vector<EpochRow> rows;
  void write_csv(const std::string& path) const;
  static History read_csv(const std::string& path);
};

// Optimizes the model in place over the dataset's train split and returns
// the per-epoch history. Pair indices refer to the train split and both
// sides of every pair must lie inside it. Styles: Single ignores the pairs
// and regresses each image's pose; Siamese trains the pairwise distance
// term only; SiameseAux blends distance and regression with the curriculum
// (or fixed weights (0.5, 0.5) when the curriculum is off). A non-finite
// loss aborts with a diagnostic.
History train(Model& model, const Dataset& data, const PairSet& pairs,
              const TrainConfig& tcfg);

struct InferResult {
  Quat q;
  std::optional<DispersionStats> stats;  // present iff the head is Qcqp
};
std::vector<InferResult> infer(Model& model, const std::vector<Image>& images);

// Versioned container: magic "OFM1", u64 little-endian JSON header length,
// UTF-8 JSON header (config, seed, param names/shapes), then the param
// blocks as little-endian float64 in header order.
void save_model(const std::string& path, const Model& m);
Model load_model(const std::string& path);

// Finite-difference verification used by tests and the gradcheck command.
struct GradCheckRow {
  std::string layer;
  double max_rel_err = 0;
  double threshold = 0;
};
std::vector<GradCheckRow> gradient_check_layers(uint64_t seed);
// Max relative error of analytic vs central-difference loss gradients over
// n_probes random parameters of a tiny two-block encoder with the Qcqp head
// and the blended pair loss.
double gradient_check_end_to_end(uint64_t seed, int n_probes = 10);

}  // namespace ofm
