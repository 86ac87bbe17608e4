#include "lmd/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lmd/simd/dispatch.hpp"

namespace lmd::nn {

using simd::kernels;

Tensor4 physics_pad(const Tensor4& x, int p) {
  if (p < 0 || p > std::min(x.H, x.W))
    throw std::invalid_argument("physics_pad: p out of [0, min(H,W)]");
  if (p == 0) return x;
  const int H = x.H, W = x.W;
  Tensor4 out(x.B, x.C, H + 2 * p, W + 2 * p);
  for (int b = 0; b < x.B; ++b) {
    for (int c = 0; c < x.C; ++c) {
      for (int r = 0; r < H + 2 * p; ++r) {
        double* dst = out.row(b, c, r);
        if (r < p) continue;  // zero top rows
        const int src_r = (r < p + H) ? r - p : H - 1;  // replicate bottom
        const double* src = x.row(b, c, src_r);
        for (int co = 0; co < W + 2 * p; ++co)
          dst[co] = src[(co - p + W) % W];  // circular wrap
      }
    }
  }
  return out;
}

Tensor4 physics_pad_backward(const Tensor4& gout, int p, int H, int W) {
  if (p == 0) return gout;
  if (gout.H != H + 2 * p || gout.W != W + 2 * p)
    throw std::invalid_argument("physics_pad_backward: shape mismatch");
  Tensor4 gin(gout.B, gout.C, H, W);
  for (int b = 0; b < gout.B; ++b) {
    for (int c = 0; c < gout.C; ++c) {
      for (int r = p; r < H + 2 * p; ++r) {
        const int src_r = (r < p + H) ? r - p : H - 1;
        double* dst = gin.row(b, c, src_r);
        const double* g = gout.row(b, c, r);
        for (int co = 0; co < W + 2 * p; ++co) dst[(co - p + W) % W] += g[co];
      }
    }
  }
  return gin;
}

void Conv2d::configure(int cin_, int cout_, int ksize_) {
  if (ksize_ != 1 && ksize_ != 3)
    throw std::invalid_argument("Conv2d: ksize must be 1 or 3");
  cin = cin_;
  cout = cout_;
  ksize = ksize_;
  kernel.init({cout, cin, ksize, ksize});
  bias.init({cout});
}

void Conv2d::init_kaiming(std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(cin) * ksize * ksize;
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (double& v : kernel.w) v = dist(rng);
  std::fill(bias.w.begin(), bias.w.end(), 0.0);
}

void Conv2d::init_zero() {
  std::fill(kernel.w.begin(), kernel.w.end(), 0.0);
  std::fill(bias.w.begin(), bias.w.end(), 0.0);
}

Tensor4 Conv2d::forward(const Tensor4& x) {
  if (x.C != cin) throw std::invalid_argument("Conv2d: channel mismatch");
  const int H = x.H, W = x.W;
  Tensor4 out(x.B, cout, H, W);
  if (ksize == 3) {
    cached = physics_pad(x, 1);
    for (int b = 0; b < x.B; ++b) {
      for (int co = 0; co < cout; ++co) {
        for (int h = 0; h < H; ++h)
          std::fill_n(out.row(b, co, h), W, bias.w[co]);
        for (int ci = 0; ci < cin; ++ci) {
          const double* k9 = kernel.w.data() +
                             (static_cast<std::size_t>(co) * cin + ci) * 9;
          for (int h = 0; h < H; ++h) {
            kernels().conv3x3_row(W, cached.row(b, ci, h),
                                  cached.row(b, ci, h + 1),
                                  cached.row(b, ci, h + 2), k9,
                                  out.row(b, co, h));
          }
        }
      }
    }
  } else {
    cached = x;
    const std::size_t n = static_cast<std::size_t>(H) * W;
    for (int b = 0; b < x.B; ++b) {
      for (int co = 0; co < cout; ++co) {
        double* dst = out.row(b, co, 0);
        std::fill_n(dst, n, bias.w[co]);
        for (int ci = 0; ci < cin; ++ci) {
          const double k1 =
              kernel.w[static_cast<std::size_t>(co) * cin + ci];
          kernels().axpy(n, k1, x.row(b, ci, 0), dst);
        }
      }
    }
  }
  return out;
}

Tensor4 Conv2d::backward(const Tensor4& gout) {
  const int H = gout.H, W = gout.W;
  const std::size_t n = static_cast<std::size_t>(H) * W;
  if (ksize == 1) {
    Tensor4 gin(gout.B, cin, H, W);
    for (int b = 0; b < gout.B; ++b) {
      for (int co = 0; co < cout; ++co) {
        const double* g = gout.row(b, co, 0);
        double bsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) bsum += g[i];
        bias.g[co] += bsum;
        for (int ci = 0; ci < cin; ++ci) {
          const std::size_t ki = static_cast<std::size_t>(co) * cin + ci;
          kernel.g[ki] += kernels().dot(n, g, cached.row(b, ci, 0));
          kernels().axpy(n, kernel.w[ki], g, gin.row(b, ci, 0));
        }
      }
    }
    return gin;
  }

  Tensor4 gpad(gout.B, cin, H + 2, W + 2);
  for (int b = 0; b < gout.B; ++b) {
    for (int co = 0; co < cout; ++co) {
      double bsum = 0.0;
      for (int h = 0; h < H; ++h) {
        const double* g = gout.row(b, co, h);
        for (int w = 0; w < W; ++w) bsum += g[w];
      }
      bias.g[co] += bsum;
      for (int ci = 0; ci < cin; ++ci) {
        double* kg = kernel.g.data() +
                     (static_cast<std::size_t>(co) * cin + ci) * 9;
        const double* kw = kernel.w.data() +
                           (static_cast<std::size_t>(co) * cin + ci) * 9;
        for (int h = 0; h < H; ++h) {
          const double* g = gout.row(b, co, h);
          for (int dy = 0; dy < 3; ++dy) {
            const double* xr = cached.row(b, ci, h + dy);
            double* gp = gpad.row(b, ci, h + dy);
            for (int dx = 0; dx < 3; ++dx) {
              kg[dy * 3 + dx] += kernels().dot(W, g, xr + dx);
              kernels().axpy(W, kw[dy * 3 + dx], g, gp + dx);
            }
          }
        }
      }
    }
  }
  return physics_pad_backward(gpad, 1, H, W);
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".kernel", &kernel});
  out.push_back({prefix + ".bias", &bias});
}

void ConvSelfAttention::configure(int channels_) {
  if (channels_ % 8 != 0)
    throw std::invalid_argument(
        "ConvSelfAttention: channels must be divisible by 8");
  channels = channels_;
  wq.configure(channels, channels / 8, 1);
  wk.configure(channels, channels / 8, 1);
  wv.configure(channels, channels, 1);
  wo.configure(channels, channels, 1);
}

void ConvSelfAttention::init(std::mt19937_64& rng) {
  wq.init_kaiming(rng);
  wk.init_kaiming(rng);
  wv.init_kaiming(rng);
  wo.init_zero();
}

Tensor4 ConvSelfAttention::forward(const Tensor4& x) {
  const int B = x.B, H = x.H, W = x.W, N = H * W;
  const int cqk = channels / 8;
  N_ = N;
  q_ = wq.forward(x);
  k_ = wk.forward(x);
  v_ = wv.forward(x);
  attn_.assign(static_cast<std::size_t>(B) * N * N, 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cqk));

  y_ = Tensor4(B, channels, H, W);
  for (int b = 0; b < B; ++b) {
    double* A = attn_.data() + static_cast<std::size_t>(b) * N * N;
    // scores: A[i][j] = scale * sum_c q[c][i] k[c][j]
    for (int c = 0; c < cqk; ++c) {
      const double* qc = q_.row(b, c, 0);
      const double* kc = k_.row(b, c, 0);
      for (int i = 0; i < N; ++i)
        kernels().axpy(N, scale * qc[i], kc, A + static_cast<std::size_t>(i) * N);
    }
    // rowwise softmax, max-subtracted
    for (int i = 0; i < N; ++i) {
      double* row = A + static_cast<std::size_t>(i) * N;
      double mx = row[0];
      for (int j = 1; j < N; ++j) mx = std::max(mx, row[j]);
      double sum = 0.0;
      for (int j = 0; j < N; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      const double inv = 1.0 / sum;
      for (int j = 0; j < N; ++j) row[j] *= inv;
    }
    // y[c][i] = sum_j A[i][j] v[c][j]
    for (int c = 0; c < channels; ++c) {
      const double* vc = v_.row(b, c, 0);
      double* yc = y_.row(b, c, 0);
      for (int i = 0; i < N; ++i)
        yc[i] = kernels().dot(N, A + static_cast<std::size_t>(i) * N, vc);
    }
  }
  Tensor4 out = wo.forward(y_);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += x.v[i];
  return out;
}

Tensor4 ConvSelfAttention::backward(const Tensor4& gout) {
  const int B = gout.B, N = N_;
  const int cqk = channels / 8;
  const double scale = 1.0 / std::sqrt(static_cast<double>(cqk));

  Tensor4 gy = wo.backward(gout);
  Tensor4 gq(B, cqk, gout.H, gout.W), gk(B, cqk, gout.H, gout.W),
      gv(B, channels, gout.H, gout.W);
  std::vector<double> dA(static_cast<std::size_t>(N) * N);
  std::vector<double> dS(static_cast<std::size_t>(N) * N);
  for (int b = 0; b < B; ++b) {
    const double* A = attn_.data() + static_cast<std::size_t>(b) * N * N;
    std::fill(dA.begin(), dA.end(), 0.0);
    for (int c = 0; c < channels; ++c) {
      const double* gyc = gy.row(b, c, 0);
      const double* vc = v_.row(b, c, 0);
      double* gvc = gv.row(b, c, 0);
      for (int i = 0; i < N; ++i) {
        // dA[i][j] += gy[c][i] v[c][j];  dV[c][j] += A[i][j] gy[c][i]
        kernels().axpy(N, gyc[i], vc, dA.data() + static_cast<std::size_t>(i) * N);
        kernels().axpy(N, gyc[i], A + static_cast<std::size_t>(i) * N, gvc);
      }
    }
    for (int i = 0; i < N; ++i) {
      const double* Ai = A + static_cast<std::size_t>(i) * N;
      const double* dAi = dA.data() + static_cast<std::size_t>(i) * N;
      double* dSi = dS.data() + static_cast<std::size_t>(i) * N;
      const double inner = kernels().dot(N, Ai, dAi);
      for (int j = 0; j < N; ++j) dSi[j] = Ai[j] * (dAi[j] - inner);
    }
    for (int c = 0; c < cqk; ++c) {
      const double* qc = q_.row(b, c, 0);
      const double* kc = k_.row(b, c, 0);
      double* gqc = gq.row(b, c, 0);
      double* gkc = gk.row(b, c, 0);
      for (int i = 0; i < N; ++i) {
        const double* dSi = dS.data() + static_cast<std::size_t>(i) * N;
        gqc[i] += scale * kernels().dot(N, dSi, kc);
        kernels().axpy(N, scale * qc[i], dSi, gkc);
      }
    }
  }
  Tensor4 gx = wq.backward(gq);
  Tensor4 t = wk.backward(gk);
  for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += t.v[i];
  t = wv.backward(gv);
  for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += t.v[i];
  for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gout.v[i];
  return gx;
}

void ConvSelfAttention::collect(const std::string& prefix,
                                std::vector<ParamRef>& out) {
  wq.collect(prefix + ".wq", out);
  wk.collect(prefix + ".wk", out);
  wv.collect(prefix + ".wv", out);
  wo.collect(prefix + ".wo", out);
}

void Linear::configure(int in_, int out_) {
  in = in_;
  out = out_;
  weight.init({out, in});
  bias.init({out});
}

void Linear::init_kaiming(std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in));
  for (double& v : weight.w) v = dist(rng);
  std::fill(bias.w.begin(), bias.w.end(), 0.0);
}

void Linear::init_zero() {
  std::fill(weight.w.begin(), weight.w.end(), 0.0);
  std::fill(bias.w.begin(), bias.w.end(), 0.0);
}

std::vector<double> Linear::forward(const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != in)
    throw std::invalid_argument("Linear: input size mismatch");
  x_ = x;
  std::vector<double> y(out);
  for (int o = 0; o < out; ++o)
    y[o] = bias.w[o] +
           kernels().dot(in, weight.w.data() + static_cast<std::size_t>(o) * in,
                         x.data());
  return y;
}

std::vector<double> Linear::backward(const std::vector<double>& gout) {
  std::vector<double> gin(in, 0.0);
  for (int o = 0; o < out; ++o) {
    bias.g[o] += gout[o];
    kernels().axpy(in, gout[o], x_.data(),
                   weight.g.data() + static_cast<std::size_t>(o) * in);
    kernels().axpy(in, gout[o],
                   weight.w.data() + static_cast<std::size_t>(o) * in,
                   gin.data());
  }
  return gin;
}

void Linear::collect(const std::string& prefix, std::vector<ParamRef>& out_) {
  out_.push_back({prefix + ".weight", &weight});
  out_.push_back({prefix + ".bias", &bias});
}

void ConditioningHead::configure(const std::vector<int>& level_widths,
                                 int hidden) {
  l1.configure(2, hidden);
  l2.configure(hidden, hidden);
  heads.resize(level_widths.size());
  for (std::size_t i = 0; i < level_widths.size(); ++i)
    heads[i].configure(hidden, level_widths[i]);
}

void ConditioningHead::init(std::mt19937_64& rng) {
  l1.init_kaiming(rng);
  l2.init_kaiming(rng);
  for (auto& h : heads) h.init_zero();
}

std::vector<std::vector<double>> ConditioningHead::forward(
    const std::vector<double>& theta01) {
  h1_ = l1.forward(theta01);
  a1_.resize(h1_.size());
  for (std::size_t i = 0; i < h1_.size(); ++i) a1_[i] = silu(h1_[i]);
  h2_ = l2.forward(a1_);
  a2_.resize(h2_.size());
  for (std::size_t i = 0; i < h2_.size(); ++i) a2_[i] = silu(h2_[i]);
  std::vector<std::vector<double>> out;
  out.reserve(heads.size());
  for (auto& h : heads) out.push_back(h.forward(a2_));
  return out;
}

namespace {
inline double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}
}  // namespace

std::vector<double> ConditioningHead::backward(
    const std::vector<std::vector<double>>& gvecs) {
  std::vector<double> ga2(a2_.size(), 0.0);
  for (std::size_t i = 0; i < heads.size(); ++i) {
    std::vector<double> g = heads[i].backward(gvecs[i]);
    for (std::size_t j = 0; j < ga2.size(); ++j) ga2[j] += g[j];
  }
  for (std::size_t j = 0; j < ga2.size(); ++j) ga2[j] *= silu_grad(h2_[j]);
  std::vector<double> ga1 = l2.backward(ga2);
  for (std::size_t j = 0; j < ga1.size(); ++j) ga1[j] *= silu_grad(h1_[j]);
  return l1.backward(ga1);
}

void ConditioningHead::collect(const std::string& prefix,
                               std::vector<ParamRef>& out) {
  l1.collect(prefix + ".l1", out);
  l2.collect(prefix + ".l2", out);
  for (std::size_t i = 0; i < heads.size(); ++i)
    heads[i].collect(prefix + ".head" + std::to_string(i), out);
}

Tensor4 film_scale(const Tensor4& x, const std::vector<double>& s) {
  if (static_cast<int>(s.size()) != x.C)
    throw std::invalid_argument("film_scale: vector length mismatch");
  Tensor4 out = x;
  const std::size_t plane = static_cast<std::size_t>(x.H) * x.W;
  for (int b = 0; b < x.B; ++b)
    for (int c = 0; c < x.C; ++c) {
      double* p = out.row(b, c, 0);
      const double f = 1.0 + s[c];
      for (std::size_t i = 0; i < plane; ++i) p[i] *= f;
    }
  return out;
}

Tensor4 film_scale_backward(const Tensor4& gout, const Tensor4& x,
                            const std::vector<double>& s,
                            std::vector<double>& ds) {
  Tensor4 gin = gout;
  ds.assign(x.C, 0.0);
  const std::size_t plane = static_cast<std::size_t>(x.H) * x.W;
  for (int b = 0; b < x.B; ++b)
    for (int c = 0; c < x.C; ++c) {
      double* g = gin.row(b, c, 0);
      const double* xp = x.row(b, c, 0);
      const double* gp = gout.row(b, c, 0);
      ds[c] += kernels().dot(plane, gp, xp);
      const double f = 1.0 + s[c];
      for (std::size_t i = 0; i < plane; ++i) g[i] *= f;
    }
  return gin;
}

Tensor4 SiLU::forward(const Tensor4& x) {
  x_ = x;
  Tensor4 out = x;
  for (double& v : out.v) v = silu(v);
  return out;
}

Tensor4 SiLU::backward(const Tensor4& gout) {
  Tensor4 gin = gout;
  for (std::size_t i = 0; i < gin.v.size(); ++i)
    gin.v[i] *= silu_grad(x_.v[i]);
  return gin;
}

Tensor4 Sigmoid::forward(const Tensor4& x) {
  y_ = x;
  for (double& v : y_.v) v = sigmoid(v);
  return y_;
}

Tensor4 Sigmoid::backward(const Tensor4& gout) {
  Tensor4 gin = gout;
  for (std::size_t i = 0; i < gin.v.size(); ++i)
    gin.v[i] *= y_.v[i] * (1.0 - y_.v[i]);
  return gin;
}

Tensor4 MaxPool2x2::forward(const Tensor4& x) {
  if (x.H % 2 != 0 || x.W % 2 != 0)
    throw std::invalid_argument("MaxPool2x2: odd spatial dims");
  H_ = x.H;
  W_ = x.W;
  Tensor4 out(x.B, x.C, x.H / 2, x.W / 2);
  argmax_.resize(out.size());
  std::size_t oi = 0;
  for (int b = 0; b < x.B; ++b)
    for (int c = 0; c < x.C; ++c)
      for (int h = 0; h < out.H; ++h)
        for (int w = 0; w < out.W; ++w, ++oi) {
          double best = x.at(b, c, 2 * h, 2 * w);
          int br = 2 * h, bc = 2 * w;
          for (int dr = 0; dr < 2; ++dr)
            for (int dc = 0; dc < 2; ++dc) {
              const double v = x.at(b, c, 2 * h + dr, 2 * w + dc);
              if (v > best) {
                best = v;
                br = 2 * h + dr;
                bc = 2 * w + dc;
              }
            }
          out.at(b, c, h, w) = best;
          argmax_[oi] = static_cast<std::uint32_t>(br * W_ + bc);
        }
  return out;
}

Tensor4 MaxPool2x2::backward(const Tensor4& gout) {
  Tensor4 gin(gout.B, gout.C, H_, W_);
  std::size_t oi = 0;
  for (int b = 0; b < gout.B; ++b)
    for (int c = 0; c < gout.C; ++c) {
      double* plane = gin.row(b, c, 0);
      for (int h = 0; h < gout.H; ++h)
        for (int w = 0; w < gout.W; ++w, ++oi)
          plane[argmax_[oi]] += gout.at(b, c, h, w);
    }
  return gin;
}

Tensor4 UpsampleNearest2x::forward(const Tensor4& x) {
  Tensor4 out(x.B, x.C, 2 * x.H, 2 * x.W);
  for (int b = 0; b < x.B; ++b)
    for (int c = 0; c < x.C; ++c)
      for (int h = 0; h < out.H; ++h) {
        const double* src = x.row(b, c, h / 2);
        double* dst = out.row(b, c, h);
        for (int w = 0; w < out.W; ++w) dst[w] = src[w / 2];
      }
  return out;
}

Tensor4 UpsampleNearest2x::backward(const Tensor4& gout) {
  Tensor4 gin(gout.B, gout.C, gout.H / 2, gout.W / 2);
  for (int b = 0; b < gout.B; ++b)
    for (int c = 0; c < gout.C; ++c)
      for (int h = 0; h < gout.H; ++h) {
        const double* g = gout.row(b, c, h);
        double* dst = gin.row(b, c, h / 2);
        for (int w = 0; w < gout.W; ++w) dst[w / 2] += g[w];
      }
  return gin;
}

void GroupNorm::configure(int channels_, int groups_) {
  if (channels_ % groups_ != 0)
    throw std::invalid_argument("GroupNorm: channels not divisible by groups");
  channels = channels_;
  groups = groups_;
  gamma.init({channels});
  beta.init({channels});
}

void GroupNorm::init() {
  std::fill(gamma.w.begin(), gamma.w.end(), 1.0);
  std::fill(beta.w.begin(), beta.w.end(), 0.0);
}

Tensor4 GroupNorm::forward(const Tensor4& x) {
  const int cg = channels / groups;
  const std::size_t plane = static_cast<std::size_t>(x.H) * x.W;
  const std::size_t gsize = plane * cg;
  xhat_ = Tensor4(x.B, x.C, x.H, x.W);
  inv_std_.assign(static_cast<std::size_t>(x.B) * groups, 0.0);
  Tensor4 out(x.B, x.C, x.H, x.W);
  for (int b = 0; b < x.B; ++b) {
    for (int g = 0; g < groups; ++g) {
      const double* base = x.row(b, g * cg, 0);
      double mean = 0.0;
      for (std::size_t i = 0; i < gsize; ++i) mean += base[i];
      mean /= static_cast<double>(gsize);
      double var = 0.0;
      for (std::size_t i = 0; i < gsize; ++i) {
        const double d = base[i] - mean;
        var += d * d;
      }
      var /= static_cast<double>(gsize);
      const double istd = 1.0 / std::sqrt(var + eps);
      inv_std_[static_cast<std::size_t>(b) * groups + g] = istd;
      double* xh = xhat_.row(b, g * cg, 0);
      for (std::size_t i = 0; i < gsize; ++i) xh[i] = (base[i] - mean) * istd;
      for (int c = 0; c < cg; ++c) {
        const double ga = gamma.w[g * cg + c], be = beta.w[g * cg + c];
        const double* xhc = xhat_.row(b, g * cg + c, 0);
        double* oc = out.row(b, g * cg + c, 0);
        for (std::size_t i = 0; i < plane; ++i) oc[i] = ga * xhc[i] + be;
      }
    }
  }
  return out;
}

Tensor4 GroupNorm::backward(const Tensor4& gout) {
  const int cg = channels / groups;
  const std::size_t plane = static_cast<std::size_t>(gout.H) * gout.W;
  const std::size_t gsize = plane * cg;
  Tensor4 gin(gout.B, gout.C, gout.H, gout.W);
  for (int b = 0; b < gout.B; ++b) {
    for (int g = 0; g < groups; ++g) {
      const double istd = inv_std_[static_cast<std::size_t>(b) * groups + g];
      // gamma/beta grads and the two group means needed for dx
      double mean_gxh = 0.0, mean_g = 0.0;
      for (int c = 0; c < cg; ++c) {
        const double* go = gout.row(b, g * cg + c, 0);
        const double* xh = xhat_.row(b, g * cg + c, 0);
        double sg = 0.0, sgx = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
          sg += go[i];
          sgx += go[i] * xh[i];
        }
        gamma.g[g * cg + c] += sgx;
        beta.g[g * cg + c] += sg;
        const double ga = gamma.w[g * cg + c];
        mean_g += ga * sg;
        mean_gxh += ga * sgx;
      }
      mean_g /= static_cast<double>(gsize);
      mean_gxh /= static_cast<double>(gsize);
      for (int c = 0; c < cg; ++c) {
        const double ga = gamma.w[g * cg + c];
        const double* go = gout.row(b, g * cg + c, 0);
        const double* xh = xhat_.row(b, g * cg + c, 0);
        double* gi = gin.row(b, g * cg + c, 0);
        for (std::size_t i = 0; i < plane; ++i)
          gi[i] = istd * (ga * go[i] - mean_g - xh[i] * mean_gxh);
      }
    }
  }
  return gin;
}

void GroupNorm::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma});
  out.push_back({prefix + ".beta", &beta});
}

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
  if (a.B != b.B || a.H != b.H || a.W != b.W)
    throw std::invalid_argument("concat_channels: shape mismatch");
  Tensor4 out(a.B, a.C + b.C, a.H, a.W);
  const std::size_t plane = static_cast<std::size_t>(a.H) * a.W;
  for (int bb = 0; bb < a.B; ++bb) {
    std::copy_n(a.row(bb, 0, 0), plane * a.C, out.row(bb, 0, 0));
    std::copy_n(b.row(bb, 0, 0), plane * b.C, out.row(bb, a.C, 0));
  }
  return out;
}

void split_channels(const Tensor4& g, int ca, Tensor4& ga, Tensor4& gb) {
  ga = Tensor4(g.B, ca, g.H, g.W);
  gb = Tensor4(g.B, g.C - ca, g.H, g.W);
  const std::size_t plane = static_cast<std::size_t>(g.H) * g.W;
  for (int b = 0; b < g.B; ++b) {
    std::copy_n(g.row(b, 0, 0), plane * ca, ga.row(b, 0, 0));
    std::copy_n(g.row(b, ca, 0), plane * (g.C - ca), gb.row(b, 0, 0));
  }
}

}  // namespace lmd::nn
