#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "lmd/nn.hpp"

using namespace lmd;
using namespace lmd::nn;

namespace {

Tensor4 random_tensor(int B, int C, int H, int W, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Tensor4 t(B, C, H, W);
  for (auto& v : t.v) v = d(rng);
  return t;
}

double dot_all(const Tensor4& a, const Tensor4& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
  return s;
}

// Expected source value of a padded cell, straight from the padding
// rules: vertical zero/replicate first, then the circular column wrap.
double pad_oracle(const Tensor4& x, int b, int c, int pr, int pc, int p) {
  const int W = x.W, H = x.H;
  int col = ((pc - p) % W + W) % W;
  const int vr = pr;  // row in the vertically padded frame
  if (vr < p) return 0.0;
  const int r = std::min(vr - p, H - 1);
  return x.at(b, c, r, col);
}

// scalar-loss finite-difference check of dL/dw for L = <gout, f()>
void fd_check(std::vector<double>& w, const std::vector<double>& grad,
              const std::function<double()>& loss, double h = 1e-6,
              double tol = 1e-4, int max_coords = 40) {
  std::mt19937_64 rng(123);
  std::vector<std::size_t> coords(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) coords[i] = i;
  std::shuffle(coords.begin(), coords.end(), rng);
  if (coords.size() > static_cast<std::size_t>(max_coords))
    coords.resize(max_coords);
  for (std::size_t i : coords) {
    const double keep = w[i];
    w[i] = keep + h;
    const double lp = loss();
    w[i] = keep - h;
    const double lm = loss();
    w[i] = keep;
    const double fd = (lp - lm) / (2 * h);
    const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
    CHECK(std::abs(grad[i] - fd) / scale < tol);
  }
}

}  // namespace

TEST_CASE("physics_pad matches the per-cell rule oracle") {
  std::mt19937_64 rng(1);
  for (int p : {1, 2}) {
    const Tensor4 x = random_tensor(2, 3, 5, 4, rng);
    const Tensor4 y = physics_pad(x, p);
    REQUIRE(y.H == 5 + 2 * p);
    REQUIRE(y.W == 4 + 2 * p);
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 3; ++c)
        for (int r = 0; r < y.H; ++r)
          for (int col = 0; col < y.W; ++col)
            CHECK(y.at(b, c, r, col) == pad_oracle(x, b, c, r, col, p));
  }
}

TEST_CASE("physics_pad_backward is the exact adjoint of physics_pad") {
  std::mt19937_64 rng(2);
  const Tensor4 x = random_tensor(1, 2, 6, 5, rng);
  const Tensor4 px = physics_pad(x, 1);
  const Tensor4 g = random_tensor(1, 2, 8, 7, rng);
  const Tensor4 gx = physics_pad_backward(g, 1, 6, 5);
  // <pad(x), g> == <x, pad^T(g)> must hold to rounding
  CHECK(dot_all(px, g) == doctest::Approx(dot_all(x, gx)).epsilon(1e-13));
}

TEST_CASE("conv3x3 on a constant field: edge sums forced by padding") {
  Conv2d conv;
  conv.configure(1, 1, 3);
  std::fill(conv.kernel.w.begin(), conv.kernel.w.end(), 1.0);
  Tensor4 x(1, 1, 4, 4);
  const double v = 0.7;
  std::fill(x.v.begin(), x.v.end(), v);
  const Tensor4 y = conv.forward(x);
  for (int c = 0; c < 4; ++c) {
    CHECK(y.at(0, 0, 0, c) == doctest::Approx(6 * v).epsilon(1e-14));  // zero top
    CHECK(y.at(0, 0, 3, c) == doctest::Approx(9 * v).epsilon(1e-14));  // replicate
    CHECK(y.at(0, 0, 1, c) == doctest::Approx(9 * v).epsilon(1e-14));
  }
}

TEST_CASE("conv2d forward matches a quadruple-loop oracle") {
  std::mt19937_64 rng(3);
  Conv2d conv;
  conv.configure(3, 4, 3);
  conv.init_kaiming(rng);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  for (auto& b : conv.bias.w) b = d(rng);
  const Tensor4 x = random_tensor(2, 3, 5, 6, rng);
  const Tensor4 y = conv.forward(x);
  for (int b = 0; b < 2; ++b)
    for (int co = 0; co < 4; ++co)
      for (int h = 0; h < 5; ++h)
        for (int w = 0; w < 6; ++w) {
          double acc = conv.bias.w[co];
          for (int ci = 0; ci < 3; ++ci)
            for (int kh = 0; kh < 3; ++kh)
              for (int kw = 0; kw < 3; ++kw)
                acc += conv.kernel
                           .w[((static_cast<std::size_t>(co) * 3 + ci) * 3 +
                               kh) *
                                  3 +
                              kw] *
                       pad_oracle(x, b, ci, h + kh, w + kw, 1);
          CHECK(y.at(b, co, h, w) == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("conv2d 1x1 forward is a per-pixel linear map") {
  std::mt19937_64 rng(4);
  Conv2d conv;
  conv.configure(2, 3, 1);
  conv.init_kaiming(rng);
  const Tensor4 x = random_tensor(1, 2, 3, 3, rng);
  const Tensor4 y = conv.forward(x);
  for (int co = 0; co < 3; ++co)
    for (int h = 0; h < 3; ++h)
      for (int w = 0; w < 3; ++w) {
        double acc = conv.bias.w[co];
        for (int ci = 0; ci < 2; ++ci)
          acc += conv.kernel.w[static_cast<std::size_t>(co) * 2 + ci] *
                 x.at(0, ci, h, w);
        CHECK(y.at(0, co, h, w) == doctest::Approx(acc).epsilon(1e-13));
      }
}

TEST_CASE("conv2d gradients agree with finite differences") {
  std::mt19937_64 rng(5);
  for (int k : {1, 3}) {
    Conv2d conv;
    conv.configure(2, 2, k);
    conv.init_kaiming(rng);
    Tensor4 x = random_tensor(1, 2, 4, 4, rng);
    const Tensor4 gout = random_tensor(1, 2, 4, 4, rng);

    auto loss = [&]() { return dot_all(conv.forward(x), gout); };
    (void)conv.forward(x);
    std::fill(conv.kernel.g.begin(), conv.kernel.g.end(), 0.0);
    std::fill(conv.bias.g.begin(), conv.bias.g.end(), 0.0);
    const Tensor4 gin = conv.backward(gout);

    fd_check(conv.kernel.w, conv.kernel.g, loss);
    fd_check(conv.bias.w, conv.bias.g, loss);
    std::vector<double> xg(gin.v.begin(), gin.v.end());
    fd_check(x.v, xg, loss);
  }
}

TEST_CASE("self-attention: zero-initialized output projection is identity") {
  std::mt19937_64 rng(6);
  ConvSelfAttention att;
  att.configure(16);
  att.init(rng);
  const Tensor4 x = random_tensor(1, 16, 4, 4, rng);
  const Tensor4 y = att.forward(x);
  for (std::size_t i = 0; i < x.v.size(); ++i) CHECK(y.v[i] == x.v[i]);
}

TEST_CASE("self-attention forward matches a dense softmax oracle") {
  std::mt19937_64 rng(7);
  ConvSelfAttention att;
  att.configure(16);
  att.init(rng);
  // give the output projection real weights so the residual path matters
  att.wo.init_kaiming(rng);
  const int H = 3, W = 4, C = 16, Cq = 2, N = H * W;
  const Tensor4 x = random_tensor(1, C, H, W, rng);
  const Tensor4 y = att.forward(x);

  auto conv1 = [&](const Conv2d& cv, const Tensor4& in, int cout) {
    Tensor4 o(1, cout, H, W);
    for (int co = 0; co < cout; ++co)
      for (int i = 0; i < N; ++i) {
        double a = cv.bias.w[co];
        for (int ci = 0; ci < in.C; ++ci)
          a += cv.kernel.w[static_cast<std::size_t>(co) * in.C + ci] *
               in.v[static_cast<std::size_t>(ci) * N + i];
        o.v[static_cast<std::size_t>(co) * N + i] = a;
      }
    return o;
  };
  const Tensor4 q = conv1(att.wq, x, Cq);
  const Tensor4 k = conv1(att.wk, x, Cq);
  const Tensor4 v = conv1(att.wv, x, C);
  Tensor4 yctx(1, C, H, W);
  for (int i = 0; i < N; ++i) {
    std::vector<double> s(N);
    double mx = -1e300;
    for (int j = 0; j < N; ++j) {
      double e = 0;
      for (int c = 0; c < Cq; ++c)
        e += q.v[static_cast<std::size_t>(c) * N + i] *
             k.v[static_cast<std::size_t>(c) * N + j];
      s[j] = e / std::sqrt(static_cast<double>(Cq));
      mx = std::max(mx, s[j]);
    }
    double z = 0;
    for (int j = 0; j < N; ++j) {
      s[j] = std::exp(s[j] - mx);
      z += s[j];
    }
    for (int c = 0; c < C; ++c) {
      double acc = 0;
      for (int j = 0; j < N; ++j)
        acc += (s[j] / z) * v.v[static_cast<std::size_t>(c) * N + j];
      yctx.v[static_cast<std::size_t>(c) * N + i] = acc;
    }
  }
  const Tensor4 proj = conv1(att.wo, yctx, C);
  for (std::size_t i = 0; i < y.v.size(); ++i)
    CHECK(y.v[i] == doctest::Approx(x.v[i] + proj.v[i]).epsilon(1e-11));
}

TEST_CASE("self-attention gradients agree with finite differences") {
  std::mt19937_64 rng(8);
  ConvSelfAttention att;
  att.configure(8);
  att.init(rng);
  att.wo.init_kaiming(rng);
  Tensor4 x = random_tensor(1, 8, 3, 3, rng);
  const Tensor4 gout = random_tensor(1, 8, 3, 3, rng);

  auto loss = [&]() { return dot_all(att.forward(x), gout); };
  (void)att.forward(x);
  std::vector<ParamRef> ps;
  att.collect("att", ps);
  for (auto& pr : ps) std::fill(pr.p->g.begin(), pr.p->g.end(), 0.0);
  const Tensor4 gin = att.backward(gout);

  for (auto& pr : ps) fd_check(pr.p->w, pr.p->g, loss, 1e-6, 2e-4, 20);
  std::vector<double> xg(gin.v.begin(), gin.v.end());
  fd_check(x.v, xg, loss, 1e-6, 2e-4, 30);
}

TEST_CASE("linear layer forward and finite-difference gradients") {
  std::mt19937_64 rng(9);
  Linear lin;
  lin.configure(3, 4);
  lin.init_kaiming(rng);
  std::vector<double> x = {0.3, -0.8, 1.1};
  const auto y = lin.forward(x);
  REQUIRE(y.size() == 4);
  for (int o = 0; o < 4; ++o) {
    double acc = lin.bias.w[o];
    for (int i = 0; i < 3; ++i)
      acc += lin.weight.w[static_cast<std::size_t>(o) * 3 + i] * x[i];
    CHECK(y[o] == doctest::Approx(acc).epsilon(1e-14));
  }
  std::vector<double> gout = {0.5, -0.2, 0.9, 0.1};
  auto loss = [&]() {
    const auto out = lin.forward(x);
    double s = 0;
    for (int o = 0; o < 4; ++o) s += out[o] * gout[o];
    return s;
  };
  (void)lin.forward(x);
  std::fill(lin.weight.g.begin(), lin.weight.g.end(), 0.0);
  std::fill(lin.bias.g.begin(), lin.bias.g.end(), 0.0);
  const auto gin = lin.backward(gout);
  fd_check(lin.weight.w, lin.weight.g, loss);
  fd_check(lin.bias.w, lin.bias.g, loss);
  std::vector<double> xv = x;
  auto loss_x = [&]() {
    const auto out = lin.forward(xv);
    double s = 0;
    for (int o = 0; o < 4; ++o) s += out[o] * gout[o];
    return s;
  };
  fd_check(xv, gin, loss_x);
}

TEST_CASE("conditioning head: zero-init heads give zero scale vectors") {
  std::mt19937_64 rng(10);
  ConditioningHead head;
  head.configure({8, 16, 32});
  head.init(rng);
  const auto svecs = head.forward({0.3, 0.7});
  REQUIRE(svecs.size() == 3);
  CHECK(svecs[0].size() == 8);
  CHECK(svecs[1].size() == 16);
  CHECK(svecs[2].size() == 32);
  for (const auto& s : svecs)
    for (double v : s) CHECK(v == 0.0);
}

TEST_CASE("conditioning head forward matches a manual MLP chain") {
  std::mt19937_64 rng(11);
  ConditioningHead head;
  head.configure({4, 6}, 16);
  head.init(rng);
  // overwrite zero-init heads with real weights
  for (auto& h : head.heads) h.init_kaiming(rng);
  const std::vector<double> theta = {0.25, 0.6};
  const auto svecs = head.forward(theta);

  auto linear = [](const Linear& l, const std::vector<double>& in) {
    std::vector<double> o(l.out);
    for (int j = 0; j < l.out; ++j) {
      double a = l.bias.w[j];
      for (int i = 0; i < l.in; ++i)
        a += l.weight.w[static_cast<std::size_t>(j) * l.in + i] * in[i];
      o[j] = a;
    }
    return o;
  };
  auto act = [](std::vector<double> v) {
    for (double& x : v) x = x / (1.0 + std::exp(-x));
    return v;
  };
  const auto h2 = act(linear(head.l2, act(linear(head.l1, theta))));
  for (std::size_t l = 0; l < head.heads.size(); ++l) {
    const auto want = linear(head.heads[l], h2);
    REQUIRE(svecs[l].size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(svecs[l][i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("conditioning head gradients agree with finite differences") {
  std::mt19937_64 rng(12);
  ConditioningHead head;
  head.configure({4, 6}, 8);
  head.init(rng);
  for (auto& h : head.heads) h.init_kaiming(rng);
  const std::vector<double> theta = {0.4, 0.55};
  std::vector<std::vector<double>> gvecs = {
      {0.1, -0.3, 0.5, 0.2}, {0.7, -0.1, 0.2, -0.6, 0.4, 0.05}};
  auto loss = [&]() {
    const auto sv = head.forward(theta);
    double s = 0;
    for (std::size_t l = 0; l < sv.size(); ++l)
      for (std::size_t i = 0; i < sv[l].size(); ++i)
        s += sv[l][i] * gvecs[l][i];
    return s;
  };
  (void)head.forward(theta);
  std::vector<ParamRef> ps;
  head.collect("cond", ps);
  for (auto& pr : ps) std::fill(pr.p->g.begin(), pr.p->g.end(), 0.0);
  (void)head.backward(gvecs);
  for (auto& pr : ps) fd_check(pr.p->w, pr.p->g, loss, 1e-6, 1e-4, 25);
}

TEST_CASE("film scale: forward rule and finite-difference gradients") {
  std::mt19937_64 rng(13);
  Tensor4 x = random_tensor(2, 3, 2, 2, rng);
  std::vector<double> s = {0.5, -0.2, 0.0};
  const Tensor4 y = film_scale(x, s);
  for (int b = 0; b < 2; ++b)
    for (int c = 0; c < 3; ++c)
      for (int h = 0; h < 2; ++h)
        for (int w = 0; w < 2; ++w)
          CHECK(y.at(b, c, h, w) ==
                doctest::Approx(x.at(b, c, h, w) * (1.0 + s[c]))
                    .epsilon(1e-14));

  const Tensor4 gout = random_tensor(2, 3, 2, 2, rng);
  std::vector<double> ds;
  const Tensor4 gx = film_scale_backward(gout, x, s, ds);
  auto loss = [&]() { return dot_all(film_scale(x, s), gout); };
  fd_check(s, ds, loss);
  std::vector<double> gxv(gx.v.begin(), gx.v.end());
  fd_check(x.v, gxv, loss);
}

TEST_CASE("silu and sigmoid: values and derivative checks") {
  CHECK(silu(0.0) == 0.0);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(silu(3.0) == doctest::Approx(3.0 / (1.0 + std::exp(-3.0))));

  std::mt19937_64 rng(14);
  SiLU act;
  Sigmoid sg;
  Tensor4 x = random_tensor(1, 2, 3, 3, rng);
  const Tensor4 gout = random_tensor(1, 2, 3, 3, rng);

  (void)act.forward(x);
  const Tensor4 g1 = act.backward(gout);
  auto loss1 = [&]() { return dot_all(act.forward(x), gout); };
  std::vector<double> g1v(g1.v.begin(), g1.v.end());
  fd_check(x.v, g1v, loss1);

  (void)sg.forward(x);
  const Tensor4 g2 = sg.backward(gout);
  auto loss2 = [&]() { return dot_all(sg.forward(x), gout); };
  std::vector<double> g2v(g2.v.begin(), g2.v.end());
  fd_check(x.v, g2v, loss2);
}

TEST_CASE("maxpool 2x2: values and gradient routing") {
  MaxPool2x2 pool;
  Tensor4 x(1, 1, 4, 4);
  for (int i = 0; i < 16; ++i) x.v[i] = i * ((i % 3) - 1);  // mixed signs
  const Tensor4 y = pool.forward(x);
  REQUIRE(y.H == 2);
  REQUIRE(y.W == 2);
  for (int h = 0; h < 2; ++h)
    for (int w = 0; w < 2; ++w) {
      const double m = std::max(
          std::max(x.at(0, 0, 2 * h, 2 * w), x.at(0, 0, 2 * h, 2 * w + 1)),
          std::max(x.at(0, 0, 2 * h + 1, 2 * w),
                   x.at(0, 0, 2 * h + 1, 2 * w + 1)));
      CHECK(y.at(0, 0, h, w) == m);
    }
  Tensor4 gout(1, 1, 2, 2);
  gout.v = {1.0, 2.0, 3.0, 4.0};
  const Tensor4 gin = pool.backward(gout);
  double total = 0;
  for (double v : gin.v) total += v;
  CHECK(total == 10.0);  // all mass routed, once per window
  for (int h = 0; h < 2; ++h)
    for (int w = 0; w < 2; ++w) {
      // gradient lands exactly on the argmax cell of each window
      double at_max = 0;
      for (int dh = 0; dh < 2; ++dh)
        for (int dw = 0; dw < 2; ++dw)
          if (x.at(0, 0, 2 * h + dh, 2 * w + dw) == y.at(0, 0, h, w))
            at_max += gin.at(0, 0, 2 * h + dh, 2 * w + dw);
      CHECK(at_max == gout.at(0, 0, h, w));
    }
}

TEST_CASE("nearest upsample: forward replication, backward block sums") {
  UpsampleNearest2x up;
  std::mt19937_64 rng(15);
  const Tensor4 x = random_tensor(1, 2, 2, 3, rng);
  const Tensor4 y = up.forward(x);
  REQUIRE(y.H == 4);
  REQUIRE(y.W == 6);
  for (int c = 0; c < 2; ++c)
    for (int h = 0; h < 4; ++h)
      for (int w = 0; w < 6; ++w)
        CHECK(y.at(0, c, h, w) == x.at(0, c, h / 2, w / 2));
  const Tensor4 gout = random_tensor(1, 2, 4, 6, rng);
  const Tensor4 gin = up.backward(gout);
  for (int c = 0; c < 2; ++c)
    for (int h = 0; h < 2; ++h)
      for (int w = 0; w < 3; ++w) {
        const double want =
            gout.at(0, c, 2 * h, 2 * w) + gout.at(0, c, 2 * h, 2 * w + 1) +
            gout.at(0, c, 2 * h + 1, 2 * w) +
            gout.at(0, c, 2 * h + 1, 2 * w + 1);
        CHECK(gin.at(0, c, h, w) == doctest::Approx(want).epsilon(1e-14));
      }
}

TEST_CASE("group norm: per-group statistics oracle") {
  std::mt19937_64 rng(16);
  GroupNorm gn;
  gn.configure(8, 4);
  gn.init();
  const Tensor4 x = random_tensor(2, 8, 3, 3, rng);
  const Tensor4 y = gn.forward(x);
  // unit gamma, zero beta: each (batch, group) slab has mean 0, var 1
  const int cg = 2, n = cg * 9;
  for (int b = 0; b < 2; ++b)
    for (int g = 0; g < 4; ++g) {
      double mean = 0, var = 0;
      for (int c = g * cg; c < (g + 1) * cg; ++c)
        for (int h = 0; h < 3; ++h)
          for (int w = 0; w < 3; ++w) mean += y.at(b, c, h, w);
      mean /= n;
      for (int c = g * cg; c < (g + 1) * cg; ++c)
        for (int h = 0; h < 3; ++h)
          for (int w = 0; w < 3; ++w) {
            const double d = y.at(b, c, h, w) - mean;
            var += d * d;
          }
      var /= n;
      CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
      CHECK(std::abs(var - 1.0) < 1e-4);  // eps-regularized variance
    }
}

TEST_CASE("group norm gradients agree with finite differences") {
  std::mt19937_64 rng(17);
  GroupNorm gn;
  gn.configure(4, 2);
  gn.init();
  std::uniform_real_distribution<double> d(0.5, 1.5);
  for (auto& v : gn.gamma.w) v = d(rng);
  for (auto& v : gn.beta.w) v = d(rng) - 1.0;
  Tensor4 x = random_tensor(1, 4, 3, 3, rng);
  const Tensor4 gout = random_tensor(1, 4, 3, 3, rng);

  auto loss = [&]() { return dot_all(gn.forward(x), gout); };
  (void)gn.forward(x);
  std::fill(gn.gamma.g.begin(), gn.gamma.g.end(), 0.0);
  std::fill(gn.beta.g.begin(), gn.beta.g.end(), 0.0);
  const Tensor4 gin = gn.backward(gout);
  fd_check(gn.gamma.w, gn.gamma.g, loss);
  fd_check(gn.beta.w, gn.beta.g, loss);
  std::vector<double> xg(gin.v.begin(), gin.v.end());
  fd_check(x.v, xg, loss, 1e-6, 5e-4);
}

TEST_CASE("concat/split channel round trip") {
  std::mt19937_64 rng(18);
  const Tensor4 a = random_tensor(1, 2, 3, 3, rng);
  const Tensor4 b = random_tensor(1, 3, 3, 3, rng);
  const Tensor4 cat = concat_channels(a, b);
  REQUIRE(cat.C == 5);
  for (int c = 0; c < 5; ++c)
    for (int h = 0; h < 3; ++h)
      for (int w = 0; w < 3; ++w)
        CHECK(cat.at(0, c, h, w) ==
              (c < 2 ? a.at(0, c, h, w) : b.at(0, c - 2, h, w)));
  Tensor4 ga, gb;
  split_channels(cat, 2, ga, gb);
  CHECK(ga.v == a.v);
  CHECK(gb.v == b.v);
}
