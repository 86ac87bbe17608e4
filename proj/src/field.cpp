#include "lmd/field.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "lmd/simd/dispatch.hpp"

namespace lmd {

FieldState::FieldState(int h, int w, double dx_) : H(h), W(w), dx(dx_) {
  if (h <= 0 || w <= 0 || dx_ <= 0.0)
    throw std::invalid_argument("FieldState: H, W, dx must be positive");
  phi.assign(cells(), 0.0);
  cA.assign(cells(), 0.0);
  cB.assign(cells(), 0.0);
}

void PhysicsParams::validate() const {
  if (M_phi <= 0 || eta <= 0 || eps2 <= 0 || W_dw <= 0 || RT_v <= 0 ||
      M_S <= 0 || M_L <= 0)
    throw std::invalid_argument("PhysicsParams: nonpositive constant");
  if (kappa_c < 0) throw std::invalid_argument("PhysicsParams: kappa_c < 0");
  if (M_S > M_L)
    throw std::invalid_argument("PhysicsParams: M_S must not exceed M_L");
  if (clip_delta <= 0 || clip_delta > 1e-3)
    throw std::invalid_argument("PhysicsParams: clip_delta out of (0, 1e-3]");
}

FieldState initial_state(int H, int W, double dx, double cA_ref,
                         int interface_row, double noise_amp,
                         std::uint64_t seed) {
  if (interface_row <= 0 || interface_row >= H)
    throw std::invalid_argument("initial_state: interface_row out of (0, H)");
  if (cA_ref <= 0.0 || cA_ref >= 1.0 || cA_ref + noise_amp >= 1.0)
    throw std::invalid_argument("initial_state: concentration out of range");
  if (noise_amp < 0.0)
    throw std::invalid_argument("initial_state: negative noise_amp");

  FieldState s(H, W, dx);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const std::size_t i = s.idx(r, c);
      if (r < interface_row) {
        s.phi[i] = 0.0;  // liquid bath, pure C
      } else {
        s.phi[i] = 1.0;
        double a = cA_ref;
        double b = 1.0 - cA_ref;
        if (noise_amp > 0.0) {
          a += noise_amp * uni(rng);
          b += noise_amp * uni(rng);
        }
        a = std::clamp(a, 0.0, 1.0);
        b = std::clamp(b, 0.0, 1.0);
        if (a + b > 1.0) {
          a /= a + b;
          b = 1.0 - a;  // exact sum, no rounding overshoot
        }
        s.cA[i] = a;
        s.cB[i] = b;
      }
    }
  }
  return s;
}

double relative_l2(std::span<const double> a, std::span<const double> b,
                   double floor) {
  if (a.size() != b.size())
    throw std::invalid_argument("relative_l2: shape mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  const auto& k = simd::kernels();
  const double num = std::sqrt(k.sum_sq_diff(a.size(), a.data(), b.data()));
  const double den = std::sqrt(k.sum_sq(b.size(), b.data()));
  return num / std::max(den, floor);
}

Tensor4 to_tensor(const FieldState& s) {
  Tensor4 t(1, 3, s.H, s.W);
  const std::size_t n = s.cells();
  std::copy_n(s.phi.data(), n, t.v.data());
  std::copy_n(s.cA.data(), n, t.v.data() + n);
  std::copy_n(s.cB.data(), n, t.v.data() + 2 * n);
  return t;
}

FieldState from_tensor(const Tensor4& t, double dx, double time,
                       double clip_tol) {
  if (t.B != 1 || t.C != 3)
    throw std::invalid_argument("from_tensor: expected a 1x3xHxW tensor");
  FieldState s(t.H, t.W, dx);
  s.time = time;
  const std::size_t n = s.cells();
  const double* phi = t.v.data();
  const double* ca = t.v.data() + n;
  const double* cb = t.v.data() + 2 * n;
  for (std::size_t i = 0; i < n; ++i) {
    double p = phi[i], a = ca[i], b = cb[i];
    if (p < -clip_tol || p > 1.0 + clip_tol || a < -clip_tol ||
        a > 1.0 + clip_tol || b < -clip_tol || b > 1.0 + clip_tol)
      throw std::invalid_argument(
          "from_tensor: value out of [0,1] beyond tolerance at cell " +
          std::to_string(i));
    p = std::clamp(p, 0.0, 1.0);
    a = std::clamp(a, 0.0, 1.0);
    b = std::clamp(b, 0.0, 1.0);
    const double sum = a + b;
    if (sum > 1.0) {
      if (sum > 1.0 + clip_tol)
        throw std::invalid_argument(
            "from_tensor: c_A + c_B = " + std::to_string(sum) +
            " exceeds 1 beyond tolerance at cell " + std::to_string(i));
      a /= sum;
      b = 1.0 - a;
    }
    s.phi[i] = p;
    s.cA[i] = a;
    s.cB[i] = b;
  }
  return s;
}

}  // namespace lmd
