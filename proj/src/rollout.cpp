#include "lmd/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lmd {

void RolloutConfig::validate(int unet_levels) const {
  if (n_steps < 0) throw std::invalid_argument("RolloutConfig: n_steps < 0");
  if (margin_rows < 0 || grow_rows < 0)
    throw std::invalid_argument("RolloutConfig: negative extension rows");
  const int div = 1 << unet_levels;
  if (grow_rows % div != 0)
    throw std::invalid_argument(
        "RolloutConfig: grow_rows must be a multiple of 2^levels");
}

FieldState warm_start(const FieldState& state0, const PhysicsParams& p,
                      const SolverConfig& scfg, double warm_start_time) {
  if (warm_start_time <= 0.0)
    throw std::invalid_argument("warm_start: warm_start_time must be > 0");
  FieldState cur = state0;
  long i = 0;
  auto advance = [&] {
    try {
      cur = step(cur, p, scfg);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("warm_start: step " + std::to_string(i + 1) +
                               ": " + e.what());
    }
    ++i;
  };
  while (cur.time < state0.time + warm_start_time) advance();
  // the surrogate needs a roughened front; the flat-interface transient
  // crosses rows almost uniformly, so step on until the columnwise
  // spread shows up (it recurs every few hundred steps)
  const long extra_budget = std::max<long>(10 * i, 10000);
  const long limit = i + extra_budget;
  while (interface_row_spread(cur) < 1) {
    if (i >= limit)
      throw std::runtime_error(
          "warm_start: interface failed to roughen within step budget");
    advance();
  }
  return cur;
}

int interface_row_spread(const FieldState& s) {
  int lo = s.H, hi = 0;
  for (int c = 0; c < s.W; ++c) {
    int r = 0;
    while (r < s.H && s.phi[s.idx(r, c)] < 0.5) ++r;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return hi - lo;
}

int deepest_liquid_row(const FieldState& s) {
  for (int r = s.H - 1; r >= 0; --r)
    for (int c = 0; c < s.W; ++c)
      if (s.phi[s.idx(r, c)] < 0.5) return r;
  return -1;
}

FieldState extend_domain(const FieldState& s, int k, double cA_ref,
                         int max_height) {
  if (k < 0) throw std::invalid_argument("extend_domain: k < 0");
  if (k == 0) return s;
  if (s.H + k > max_height)
    throw std::runtime_error("extend_domain: height " +
                             std::to_string(s.H + k) + " exceeds max_height " +
                             std::to_string(max_height));
  FieldState out(s.H + k, s.W, s.dx);
  out.time = s.time;
  std::copy(s.phi.begin(), s.phi.end(), out.phi.begin());
  std::copy(s.cA.begin(), s.cA.end(), out.cA.begin());
  std::copy(s.cB.begin(), s.cB.end(), out.cB.begin());
  for (int r = s.H; r < out.H; ++r)
    for (int c = 0; c < s.W; ++c) {
      const std::size_t i = out.idx(r, c);
      out.phi[i] = 1.0;
      out.cA[i] = cA_ref;
      out.cB[i] = 1.0 - cA_ref;
    }
  return out;
}

std::vector<FieldState> rollout(UNet& net, const FieldState& state0,
                                const RolloutConfig& cfg) {
  cfg.validate(net.config().levels);
  const int div = 1 << net.config().levels;
  if (state0.H % div != 0 || state0.W % div != 0)
    throw std::invalid_argument("rollout: state dims not divisible by 2^levels");
  const double dtau_time =
      cfg.dtau_time > 0.0 ? cfg.dtau_time : cfg.theta.dtau;

  auto needs_extension = [&](const FieldState& s) {
    return cfg.grow_rows > 0 && deepest_liquid_row(s) > s.H - cfg.margin_rows &&
           s.H < cfg.max_height;
  };

  std::vector<FieldState> states;
  states.push_back(state0);
  FieldState cur = state0;
  for (int n = 0; n < cfg.n_steps; ++n) {
    if (needs_extension(cur))
      cur = extend_domain(cur, cfg.grow_rows, cfg.theta.cA_ref,
                          cfg.max_height);
    Tensor4 pred = net.forward(to_tensor(cur), cfg.theta);
    for (double v : pred.v)
      if (!std::isfinite(v))
        throw std::runtime_error("rollout: non-finite prediction at step " +
                                 std::to_string(n + 1));
    // sigmoid bounds each channel to [0,1] but not the pair sum; rescale
    // unconditionally instead of erroring so long rollouts cannot abort
    // on slow constraint drift
    cur = from_tensor(pred, cur.dx, cur.time + dtau_time, 1.0);
    // keep emitted states clear of the bottom margin as well
    if (needs_extension(cur))
      cur = extend_domain(cur, cfg.grow_rows, cfg.theta.cA_ref,
                          cfg.max_height);
    states.push_back(cur);
  }
  return states;
}

}  // namespace lmd
