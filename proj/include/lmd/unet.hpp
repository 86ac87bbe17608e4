#pragma once
// Conditional U-Net surrogate: encoder/decoder with physics-padded
// convolutions, bottleneck self-attention, FiLM-scaled skip connections,
// and the Adam trainer on solver-generated snapshot pairs.

#include <cstdint>
#include <string>
#include <vector>

#include "lmd/field.hpp"
#include "lmd/nn.hpp"
#include "lmd/tensor.hpp"

namespace lmd {

struct UNetConfig {
  int levels = 4;         // encoder levels; bottleneck sits below them
  int base_channels = 8;  // paper-scale configuration uses 32
  int in_channels = 3, out_channels = 3;
  bool attention_in_bottleneck = true;
  int norm_groups = 8;
  ConditioningRange cond_range;

  int width(int level) const { return base_channels << level; }
  void validate() const;
};

// conv3x3 -> groupnorm -> SiLU, twice
struct ConvBlock {
  nn::Conv2d c1, c2;
  nn::GroupNorm n1, n2;
  nn::SiLU a1, a2;

  void configure(int cin, int cout, int groups);
  void init(std::mt19937_64& rng);
  Tensor4 forward(const Tensor4& x);
  Tensor4 backward(const Tensor4& g);
  void collect(const std::string& prefix, std::vector<nn::ParamRef>& out);
};

class UNet {
 public:
  explicit UNet(const UNetConfig& cfg);

  const UNetConfig& config() const { return cfg_; }
  void init_weights(std::uint64_t seed);

  Tensor4 forward(const Tensor4& x, const ConditioningInput& theta);
  // Accumulates parameter gradients; input and theta gradients are kept
  // for the gradient audit.
  Tensor4 backward(const Tensor4& dLdy);
  const std::vector<double>& theta_grad() const { return dtheta01_; }

  std::vector<nn::ParamRef> params();      // construction order
  std::vector<nn::ParamRef> manifest();    // lexicographic name order
  void zero_grad();

 private:
  UNetConfig cfg_;
  std::vector<ConvBlock> enc_;
  std::vector<nn::MaxPool2x2> pools_;
  ConvBlock mid_;
  nn::ConvSelfAttention attn_;
  std::vector<nn::UpsampleNearest2x> ups_;
  std::vector<nn::Conv2d> upconv_;
  std::vector<ConvBlock> dec_;
  nn::Conv2d out_conv_;
  nn::Sigmoid out_act_;
  nn::ConditioningHead head_;

  // forward caches
  std::vector<Tensor4> skips_, film_skips_;
  Tensor4 mid_pre_film_;
  std::vector<std::vector<double>> svecs_;
  std::vector<double> dtheta01_;
};

// One generated trajectory plus its reference concentration.
struct Trajectory {
  double cA_ref = 0.2;
  std::vector<FieldState> snaps;
};

struct Dataset {
  struct Pair {
    int traj, i, j;  // snapshot indices; gap = j - i
  };
  std::vector<std::vector<Tensor4>> tensors;  // per trajectory
  std::vector<double> cA_ref;
  std::vector<Pair> pairs;

  ConditioningInput theta(const Pair& p) const {
    return {static_cast<double>(p.j - p.i), cA_ref[p.traj]};
  }
};

// Every ordered snapshot pair with index gap in [k_min, k_max], ordered
// by gap then start index. Throws if the result is empty.
Dataset training_pairs(const std::vector<Trajectory>& trajs, int k_min,
                       int k_max);

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 10;
  int batch_size = 8;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t seed = 0;
};

// Per-sample loss is relative_l2 over the three channels jointly.
// Returns the mean loss per epoch. Throws on NaN loss with diagnostics.
std::vector<double> train(UNet& net, const Dataset& ds,
                          const TrainConfig& tc);

}  // namespace lmd
