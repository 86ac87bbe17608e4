#include "lmd/unet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace lmd {

void UNetConfig::validate() const {
  if (levels < 1) throw std::invalid_argument("UNetConfig: levels < 1");
  if (base_channels < 1)
    throw std::invalid_argument("UNetConfig: base_channels < 1");
  if (base_channels % norm_groups != 0)
    throw std::invalid_argument(
        "UNetConfig: base_channels not divisible by norm_groups");
  if (attention_in_bottleneck && width(levels) % 8 != 0)
    throw std::invalid_argument(
        "UNetConfig: bottleneck width not divisible by 8");
}

void ConvBlock::configure(int cin, int cout, int groups) {
  c1.configure(cin, cout, 3);
  c2.configure(cout, cout, 3);
  n1.configure(cout, groups);
  n2.configure(cout, groups);
}

void ConvBlock::init(std::mt19937_64& rng) {
  c1.init_kaiming(rng);
  c2.init_kaiming(rng);
  n1.init();
  n2.init();
}

Tensor4 ConvBlock::forward(const Tensor4& x) {
  return a2.forward(n2.forward(c2.forward(a1.forward(n1.forward(c1.forward(x))))));
}

Tensor4 ConvBlock::backward(const Tensor4& g) {
  return c1.backward(n1.backward(a1.backward(c2.backward(n2.backward(a2.backward(g))))));
}

void ConvBlock::collect(const std::string& prefix,
                        std::vector<nn::ParamRef>& out) {
  c1.collect(prefix + ".c1", out);
  n1.collect(prefix + ".n1", out);
  c2.collect(prefix + ".c2", out);
  n2.collect(prefix + ".n2", out);
}

UNet::UNet(const UNetConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int L = cfg_.levels;
  enc_.resize(L);
  pools_.resize(L);
  ups_.resize(L);
  upconv_.resize(L);
  dec_.resize(L);
  for (int i = 0; i < L; ++i) {
    const int cin = (i == 0) ? cfg_.in_channels : cfg_.width(i - 1);
    enc_[i].configure(cin, cfg_.width(i), cfg_.norm_groups);
    upconv_[i].configure(cfg_.width(i + 1), cfg_.width(i), 3);
    dec_[i].configure(2 * cfg_.width(i), cfg_.width(i), cfg_.norm_groups);
  }
  mid_.configure(cfg_.width(L - 1), cfg_.width(L), cfg_.norm_groups);
  if (cfg_.attention_in_bottleneck) attn_.configure(cfg_.width(L));
  out_conv_.configure(cfg_.width(0), cfg_.out_channels, 1);
  std::vector<int> widths;
  for (int i = 0; i <= L; ++i) widths.push_back(cfg_.width(i));
  head_.configure(widths);
}

void UNet::init_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& e : enc_) e.init(rng);
  mid_.init(rng);
  if (cfg_.attention_in_bottleneck) attn_.init(rng);
  for (auto& u : upconv_) u.init_kaiming(rng);
  for (auto& d : dec_) d.init(rng);
  out_conv_.init_kaiming(rng);
  head_.init(rng);
}

namespace {

std::vector<double> normalize_theta(const ConditioningInput& theta,
                                    const ConditioningRange& r) {
  const double dspan = std::max(r.dtau_max - r.dtau_min, 1e-12);
  const double cspan = std::max(r.ca_max - r.ca_min, 1e-12);
  return {(theta.dtau - r.dtau_min) / dspan, (theta.cA_ref - r.ca_min) / cspan};
}

}  // namespace

Tensor4 UNet::forward(const Tensor4& x, const ConditioningInput& theta) {
  const int L = cfg_.levels;
  const int div = 1 << L;
  if (x.H % div != 0 || x.W % div != 0)
    throw std::invalid_argument("UNet: H and W must be divisible by 2^levels");
  if (x.C != cfg_.in_channels)
    throw std::invalid_argument("UNet: input channel mismatch");

  svecs_ = head_.forward(normalize_theta(theta, cfg_.cond_range));
  skips_.assign(L, Tensor4());
  film_skips_.assign(L, Tensor4());

  Tensor4 cur = x;
  for (int i = 0; i < L; ++i) {
    cur = enc_[i].forward(cur);
    skips_[i] = cur;
    film_skips_[i] = nn::film_scale(cur, svecs_[i]);
    cur = pools_[i].forward(cur);
  }
  cur = mid_.forward(cur);
  mid_pre_film_ = cur;
  cur = nn::film_scale(cur, svecs_[L]);
  if (cfg_.attention_in_bottleneck) cur = attn_.forward(cur);
  for (int i = L - 1; i >= 0; --i) {
    cur = ups_[i].forward(cur);
    cur = upconv_[i].forward(cur);
    cur = dec_[i].forward(nn::concat_channels(film_skips_[i], cur));
  }
  return out_act_.forward(out_conv_.forward(cur));
}

Tensor4 UNet::backward(const Tensor4& dLdy) {
  const int L = cfg_.levels;
  Tensor4 g = out_conv_.backward(out_act_.backward(dLdy));
  std::vector<std::vector<double>> gsvec(L + 1);
  std::vector<Tensor4> gskips(L);
  for (int i = 0; i < L; ++i) {
    g = dec_[i].backward(g);
    Tensor4 gskip_f, gup;
    nn::split_channels(g, cfg_.width(i), gskip_f, gup);
    gskips[i] =
        nn::film_scale_backward(gskip_f, skips_[i], svecs_[i], gsvec[i]);
    g = ups_[i].backward(upconv_[i].backward(gup));
  }
  if (cfg_.attention_in_bottleneck) g = attn_.backward(g);
  g = nn::film_scale_backward(g, mid_pre_film_, svecs_[L], gsvec[L]);
  g = mid_.backward(g);
  for (int i = L - 1; i >= 0; --i) {
    g = pools_[i].backward(g);
    for (std::size_t k = 0; k < g.v.size(); ++k) g.v[k] += gskips[i].v[k];
    g = enc_[i].backward(g);
  }
  dtheta01_ = head_.backward(gsvec);
  return g;
}

std::vector<nn::ParamRef> UNet::params() {
  std::vector<nn::ParamRef> out;
  const int L = cfg_.levels;
  for (int i = 0; i < L; ++i)
    enc_[i].collect("enc" + std::to_string(i), out);
  mid_.collect("mid", out);
  if (cfg_.attention_in_bottleneck) attn_.collect("attn", out);
  for (int i = 0; i < L; ++i) {
    upconv_[i].collect("upconv" + std::to_string(i), out);
    dec_[i].collect("dec" + std::to_string(i), out);
  }
  out_conv_.collect("out", out);
  head_.collect("cond", out);
  return out;
}

std::vector<nn::ParamRef> UNet::manifest() {
  auto out = params();
  std::sort(out.begin(), out.end(),
            [](const nn::ParamRef& a, const nn::ParamRef& b) {
              return a.name < b.name;
            });
  return out;
}

void UNet::zero_grad() {
  for (auto& p : params()) std::fill(p.p->g.begin(), p.p->g.end(), 0.0);
}

Dataset training_pairs(const std::vector<Trajectory>& trajs, int k_min,
                       int k_max) {
  if (k_min < 1 || k_max < k_min)
    throw std::invalid_argument("training_pairs: bad skip range");
  Dataset ds;
  for (const auto& t : trajs) {
    std::vector<Tensor4> ts;
    ts.reserve(t.snaps.size());
    for (const auto& s : t.snaps) ts.push_back(to_tensor(s));
    ds.tensors.push_back(std::move(ts));
    ds.cA_ref.push_back(t.cA_ref);
  }
  for (int gap = k_min; gap <= k_max; ++gap)
    for (int tr = 0; tr < static_cast<int>(trajs.size()); ++tr) {
      const int n = static_cast<int>(trajs[tr].snaps.size());
      for (int i = 0; i + gap < n; ++i)
        ds.pairs.push_back({tr, i, i + gap});
    }
  if (ds.pairs.empty())
    throw std::invalid_argument("training_pairs: empty dataset, range too narrow");
  return ds;
}

std::vector<double> train(UNet& net, const Dataset& ds, const TrainConfig& tc) {
  if (ds.pairs.empty()) throw std::invalid_argument("train: empty dataset");
  if (tc.learning_rate < 0 || tc.epochs < 1 || tc.batch_size < 1)
    throw std::invalid_argument("train: bad config");

  auto prefs = net.params();
  std::vector<std::vector<double>> m(prefs.size()), v(prefs.size());
  for (std::size_t i = 0; i < prefs.size(); ++i) {
    m[i].assign(prefs[i].p->size(), 0.0);
    v[i].assign(prefs[i].p->size(), 0.0);
  }

  std::mt19937_64 rng(tc.seed);
  std::vector<int> order(ds.pairs.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> history;
  long t = 0;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += tc.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
      const double inv_nb = 1.0 / static_cast<double>(end - start);
      net.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t s = start; s < end; ++s) {
        const auto& pr = ds.pairs[order[s]];
        const Tensor4& x = ds.tensors[pr.traj][pr.i];
        const Tensor4& y = ds.tensors[pr.traj][pr.j];
        Tensor4 pred = net.forward(x, ds.theta(pr));
        const double loss = relative_l2(pred.v, y.v);
        batch_loss += loss;
        // d relative_l2 / d pred
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < pred.v.size(); ++i) {
          const double d = pred.v[i] - y.v[i];
          num += d * d;
          den += y.v[i] * y.v[i];
        }
        num = std::sqrt(num);
        den = std::max(std::sqrt(den), 1e-12);
        Tensor4 gl = pred;
        if (num > 0.0) {
          const double f = inv_nb / (num * den);
          for (std::size_t i = 0; i < gl.v.size(); ++i)
            gl.v[i] = f * (pred.v[i] - y.v[i]);
        } else {
          std::fill(gl.v.begin(), gl.v.end(), 0.0);
        }
        net.backward(gl);
      }
      batch_loss *= inv_nb;
      if (!std::isfinite(batch_loss)) {
        double pn = 0.0;
        for (auto& p : prefs)
          for (double w : p.p->w) pn += w * w;
        throw std::runtime_error(
            "train: NaN loss at epoch " + std::to_string(epoch) + " batch " +
            std::to_string(n_batches) +
            " (parameter norm " + std::to_string(std::sqrt(pn)) + ")");
      }
      epoch_loss += batch_loss;
      ++n_batches;
      ++t;
      const double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(t));
      const double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(t));
      for (std::size_t i = 0; i < prefs.size(); ++i) {
        auto& p = *prefs[i].p;
        for (std::size_t j = 0; j < p.size(); ++j) {
          m[i][j] = tc.beta1 * m[i][j] + (1.0 - tc.beta1) * p.g[j];
          v[i][j] = tc.beta2 * v[i][j] + (1.0 - tc.beta2) * p.g[j] * p.g[j];
          p.w[j] -= tc.learning_rate * (m[i][j] / bc1) /
                    (std::sqrt(v[i][j] / bc2) + tc.eps);
        }
      }
    }
    history.push_back(epoch_loss / std::max(n_batches, 1));
  }
  return history;
}

}  // namespace lmd
