#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "lmd/field.hpp"

using namespace lmd;

TEST_CASE("initial_state: noiseless construction") {
  const FieldState s = initial_state(8, 8, 1.0, 0.2, 2, 0.0, 0);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      const auto i = s.idx(r, c);
      if (r < 2) {
        CHECK(s.phi[i] == 0.0);
        CHECK(s.cA[i] == 0.0);
        CHECK(s.cB[i] == 0.0);
      } else {
        CHECK(s.phi[i] == 1.0);
        CHECK(s.cA[i] == 0.2);
        CHECK(s.cB[i] == 0.8);
      }
    }
  CHECK(s.time == 0.0);
}

TEST_CASE("initial_state: cA_ref=0.3 exact when noiseless") {
  const FieldState s = initial_state(8, 8, 1.0, 0.3, 2, 0.0, 7);
  CHECK(s.cA[s.idx(5, 3)] == 0.3);
  CHECK(s.cB[s.idx(5, 3)] == 0.7);
}

TEST_CASE("initial_state: determinism and noise bound") {
  const FieldState a = initial_state(16, 16, 1.0, 0.25, 4, 0.05, 99);
  const FieldState b = initial_state(16, 16, 1.0, 0.25, 4, 0.05, 99);
  CHECK(a.phi == b.phi);
  CHECK(a.cA == b.cA);
  CHECK(a.cB == b.cB);
  for (int r = 4; r < 16; ++r)
    for (int c = 0; c < 16; ++c) {
      CHECK(std::abs(a.cA[a.idx(r, c)] - 0.25) <= 0.05 + 1e-15);
      CHECK(std::abs(a.cB[a.idx(r, c)] - 0.75) <= 0.05 + 1e-15);
      CHECK(a.cA[a.idx(r, c)] + a.cB[a.idx(r, c)] <= 1.0);
    }
}

TEST_CASE("initial_state: parameter errors") {
  CHECK_THROWS_AS(initial_state(8, 8, 1.0, 0.2, 0, 0.0, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(initial_state(8, 8, 1.0, 0.2, 8, 0.0, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(initial_state(8, 8, 1.0, 0.95, 2, 0.1, 0),
                  std::invalid_argument);
}

TEST_CASE("relative_l2: identity, closed form, shape mismatch") {
  const std::vector<double> a = {1.0, 2.0, -3.0};
  CHECK(relative_l2(a, a) == 0.0);
  const std::vector<double> u = {1.0, 0.0}, v = {0.0, 1.0};
  CHECK(relative_l2(u, v) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  const std::vector<double> w = {1.0};
  CHECK_THROWS_AS(relative_l2(a, w), std::invalid_argument);
}

TEST_CASE("relative_l2: element-wise summation oracle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  std::vector<double> a(16), b(16);
  for (auto& x : a) x = d(rng);
  for (auto& x : b) x = d(rng);
  // independent straightforward reimplementation
  double num = 0, den = 0;
  for (int i = 0; i < 16; ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  const double expect = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
  CHECK(relative_l2(a, b) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("relative_l2: scale invariance and negation symmetry") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> a(32), b(32), an(32), bn(32), as(32), bs(32);
  for (int i = 0; i < 32; ++i) {
    a[i] = d(rng);
    b[i] = d(rng);
    an[i] = -a[i];
    bn[i] = -b[i];
    as[i] = 3.5 * a[i];
    bs[i] = 3.5 * b[i];
  }
  CHECK(relative_l2(a, b) == doctest::Approx(relative_l2(an, bn)).epsilon(1e-14));
  CHECK(relative_l2(a, b) == doctest::Approx(relative_l2(as, bs)).epsilon(1e-13));
}

TEST_CASE("to_tensor/from_tensor round trip") {
  const FieldState s = initial_state(8, 4, 0.5, 0.3, 3, 0.05, 21);
  const Tensor4 t = to_tensor(s);
  CHECK(t.B == 1);
  CHECK(t.C == 3);
  CHECK(t.H == 8);
  CHECK(t.W == 4);
  const FieldState s2 = from_tensor(t, s.dx, s.time);
  CHECK(s2.phi == s.phi);
  CHECK(s2.cA == s.cA);
  CHECK(s2.cB == s.cB);
  CHECK(s2.dx == s.dx);
  CHECK(s2.time == s.time);
}

TEST_CASE("from_tensor: proportional rescale at the clip boundary") {
  Tensor4 t(1, 3, 2, 2);
  t.at(0, 0, 0, 0) = 1.0;
  t.at(0, 1, 0, 0) = 0.6003;  // c_A + c_B = 1.0005
  t.at(0, 2, 0, 0) = 0.4002;
  const FieldState s = from_tensor(t, 1.0, 0.0);
  CHECK(s.cA[0] + s.cB[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.cA[0] == doctest::Approx(0.6003 / 1.0005).epsilon(1e-12));
}

TEST_CASE("from_tensor: beyond tolerance errors") {
  Tensor4 t(1, 3, 1, 1);
  t.at(0, 0, 0, 0) = 0.5;
  t.at(0, 1, 0, 0) = 0.9;
  t.at(0, 2, 0, 0) = 0.6;  // sum 1.5
  CHECK_THROWS_AS(from_tensor(t, 1.0, 0.0), std::invalid_argument);
  Tensor4 u(1, 3, 1, 1);
  u.at(0, 0, 0, 0) = 1.5;  // phi out of range
  CHECK_THROWS_AS(from_tensor(u, 1.0, 0.0), std::invalid_argument);
}
