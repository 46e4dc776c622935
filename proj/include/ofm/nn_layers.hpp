#pragma once

// Concrete layers behind the encoder. All run in 64-bit, keep per-branch
// activation caches in LayerCtx objects, and accumulate parameter gradients
// on backward. Conv uses same padding and stride 1; pooling layers halve or
// collapse the spatial extent.

#include <vector>

#include "ofm/nn.hpp"

namespace ofm {

class Conv2d : public Layer {
 public:
  Conv2d(std::string name, int in_c, int out_c, int kernel);
  std::string name() const override { return name_; }
  std::vector<Param*> params() override { return {&w_, &b_}; }
  Tensor forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                 Rng* rng) override;
  Tensor backward(const Tensor& gy, const LayerCtx& ctx) override;

  int in_c() const { return in_c_; }
  int out_c() const { return out_c_; }
  int kernel() const { return k_; }
  Param w_, b_;

 private:
  std::string name_;
  int in_c_, out_c_, k_;
};

class BatchNorm2d : public Layer {
 public:
  BatchNorm2d(std::string name, int channels, double momentum = 0.1, double eps = 1e-5);
  std::string name() const override { return name_; }
  std::vector<Param*> params() override { return {&gamma_, &beta_, &run_mean_, &run_var_}; }
  Tensor forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                 Rng* rng) override;
  Tensor backward(const Tensor& gy, const LayerCtx& ctx) override;

  Param gamma_, beta_;
  Param run_mean_, run_var_;  // inference statistics, not optimized

 private:
  std::string name_;
  int c_;
  double momentum_, eps_;
};

class PRelu : public Layer {
 public:
  PRelu(std::string name, int channels, double alpha_init);
  std::string name() const override { return name_; }
  std::vector<Param*> params() override { return {&alpha_}; }
  Tensor forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                 Rng* rng) override;
  Tensor backward(const Tensor& gy, const LayerCtx& ctx) override;

  Param alpha_;

 private:
  std::string name_;
  int c_;
};

class Relu : public Layer {
 public:
  explicit Relu(std::string name) : name_(std::move(name)) {}
  std::string name() const override { return name_; }
  Tensor forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                 Rng* rng) override;
  Tensor backward(const Tensor& gy, const LayerCtx& ctx) override;

 private:
  std::string name_;
};

// 2x2 stride-2 max pool; odd trailing row/column is dropped.
class MaxPool2 : public Layer {
 public:
  explicit MaxPool2(std::string name) : name_(std::move(name)) {}
  std::string name() const override { return name_; }
  Tensor forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                 Rng* rng) override;
  Tensor backward(const Tensor& gy, const LayerCtx& ctx) override;

 private:
  std::string name_;
};

// Inverted dropout with one mask per optimizer step: the first train-mode
// forward after begin_step draws the mask, later forwards in the same step
// (the second Siamese branch) reuse it.
class Dropout : public Layer {
 public:
  Dropout(std::string name, double rate);
  std::string name() const override { return name_; }
  Tensor forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                 Rng* rng) override;
  Tensor backward(const Tensor& gy, const LayerCtx& ctx) override;
  void begin_step() override { fresh_ = true; }

  double rate() const { return rate_; }

 private:
  std::string name_;
  double rate_;
  bool fresh_ = true;
  std::vector<double> mask_;
};

// Generalized-mean pooling (N,C,H,W) -> (N,C) with a learnable exponent;
// spatial values pass through a 1e-6 floor first. Throws when p <= 0.
class GemPool : public Layer {
 public:
  GemPool(std::string name, double p_init);
  std::string name() const override { return name_; }
  std::vector<Param*> params() override { return {&p_}; }
  Tensor forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                 Rng* rng) override;
  Tensor backward(const Tensor& gy, const LayerCtx& ctx) override;

  Param p_;

 private:
  std::string name_;
};

class GlobalMaxPool : public Layer {
 public:
  explicit GlobalMaxPool(std::string name) : name_(std::move(name)) {}
  std::string name() const override { return name_; }
  Tensor forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                 Rng* rng) override;
  Tensor backward(const Tensor& gy, const LayerCtx& ctx) override;

 private:
  std::string name_;
};

// Sum of the global max and the global average per channel.
class MaxPlusAvgPool : public Layer {
 public:
  explicit MaxPlusAvgPool(std::string name) : name_(std::move(name)) {}
  std::string name() const override { return name_; }
  Tensor forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                 Rng* rng) override;
  Tensor backward(const Tensor& gy, const LayerCtx& ctx) override;

 private:
  std::string name_;
};

class Dense : public Layer {
 public:
  Dense(std::string name, int in_k, int out_k);
  std::string name() const override { return name_; }
  std::vector<Param*> params() override { return {&w_, &b_}; }
  Tensor forward(const Tensor& x, std::unique_ptr<LayerCtx>& ctx, bool train,
                 Rng* rng) override;
  Tensor backward(const Tensor& gy, const LayerCtx& ctx) override;

  int in_k() const { return in_k_; }
  int out_k() const { return out_k_; }
  Param w_, b_;

 private:
  std::string name_;
  int in_k_, out_k_;
};

}  // namespace ofm
