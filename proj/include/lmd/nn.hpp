#pragma once
// Neural building blocks: physics-aware padding, padded convolutions,
// convolutional self-attention, FiLM conditioning and the small pointwise
// layers, each with an explicit backward pass. Layers cache what they
// need during forward; backward accumulates parameter gradients.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lmd/field.hpp"
#include "lmd/tensor.hpp"

namespace lmd::nn {

struct Param {
  std::vector<double> w, g;
  std::vector<int> shape;

  void init(std::vector<int> shp) {
    shape = std::move(shp);
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    w.assign(n, 0.0);
    g.assign(n, 0.0);
  }
  std::size_t size() const { return w.size(); }
};

struct ParamRef {
  std::string name;
  Param* p;
};

// Boundary-aware padding: periodic left/right, zero top (pure liquid),
// replicate bottom (bulk alloy). Vertical rules are applied first, the
// horizontal wrap then acts on the padded rows.
Tensor4 physics_pad(const Tensor4& x, int p);
// Adjoint: folds an (H+2p)x(W+2p) gradient back onto the HxW input.
Tensor4 physics_pad_backward(const Tensor4& gout, int p, int H, int W);

struct Conv2d {
  int cin = 0, cout = 0, ksize = 3;  // ksize 3 uses physics_pad(x, 1)
  Param kernel, bias;
  Tensor4 cached;  // padded input (ksize 3) or raw input (ksize 1)

  void configure(int cin_, int cout_, int ksize_);
  void init_kaiming(std::mt19937_64& rng);
  void init_zero();
  Tensor4 forward(const Tensor4& x);
  Tensor4 backward(const Tensor4& gout);
  void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

// Non-local attention over all spatial positions, projections by 1x1
// convolutions, residual output. Query/key width is C/8.
struct ConvSelfAttention {
  int channels = 0;
  Conv2d wq, wk, wv, wo;
  Tensor4 q_, k_, v_, y_;
  std::vector<double> attn_;  // B x N x N rowwise-softmax weights
  int N_ = 0;

  void configure(int channels_);
  void init(std::mt19937_64& rng);  // wo starts at zero: identity residual
  Tensor4 forward(const Tensor4& x);
  Tensor4 backward(const Tensor4& gout);
  void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

struct Linear {
  int in = 0, out = 0;
  Param weight, bias;
  std::vector<double> x_;

  void configure(int in_, int out_);
  void init_kaiming(std::mt19937_64& rng);
  void init_zero();
  std::vector<double> forward(const std::vector<double>& x);
  std::vector<double> backward(const std::vector<double>& gout);
  void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

// theta -> per-level channel scaling vectors. Two hidden layers of 128
// with SiLU, then one linear head per U-Net level.
struct ConditioningHead {
  Linear l1, l2;
  std::vector<Linear> heads;
  std::vector<double> h1_, h2_, a1_, a2_;  // pre/post activation caches

  void configure(const std::vector<int>& level_widths, int hidden = 128);
  void init(std::mt19937_64& rng);  // head outputs start at zero (identity FiLM)
  std::vector<std::vector<double>> forward(const std::vector<double>& theta01);
  // Returns d/d theta01; accumulates weight gradients.
  std::vector<double> backward(const std::vector<std::vector<double>>& gvecs);
  void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

// out[b,c,h,w] = x[b,c,h,w] * (1 + s[c])
Tensor4 film_scale(const Tensor4& x, const std::vector<double>& s);
// Adjoint; also writes ds (length C).
Tensor4 film_scale_backward(const Tensor4& gout, const Tensor4& x,
                            const std::vector<double>& s,
                            std::vector<double>& ds);

struct SiLU {
  Tensor4 x_;
  Tensor4 forward(const Tensor4& x);
  Tensor4 backward(const Tensor4& gout);
};

struct Sigmoid {
  Tensor4 y_;
  Tensor4 forward(const Tensor4& x);
  Tensor4 backward(const Tensor4& gout);
};

struct MaxPool2x2 {
  std::vector<std::uint32_t> argmax_;
  int H_ = 0, W_ = 0;
  Tensor4 forward(const Tensor4& x);
  Tensor4 backward(const Tensor4& gout);
};

struct UpsampleNearest2x {
  Tensor4 forward(const Tensor4& x);
  Tensor4 backward(const Tensor4& gout);
};

struct GroupNorm {
  int channels = 0, groups = 8;
  double eps = 1e-6;
  Param gamma, beta;
  Tensor4 xhat_;
  std::vector<double> inv_std_;  // per (b, group)

  void configure(int channels_, int groups_ = 8);
  void init();
  Tensor4 forward(const Tensor4& x);
  Tensor4 backward(const Tensor4& gout);
  void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b);
void split_channels(const Tensor4& g, int ca, Tensor4& ga, Tensor4& gb);

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace lmd::nn
