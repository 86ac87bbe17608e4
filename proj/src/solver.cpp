#include "lmd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lmd/simd/dispatch.hpp"

namespace lmd {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Clips a concentration pair so cA, cB >= delta and cA + cB <= 1 - delta,
// keeping the implicit cC away from the logarithm singularity too.
inline void clip_pair(double& a, double& b, double delta) {
  a = std::max(a, delta);
  b = std::max(b, delta);
  const double s = a + b;
  if (s > 1.0 - delta) {
    const double sc = (1.0 - delta) / s;
    a *= sc;
    b *= sc;
  }
}

// Pads a field to (H+2) x (W+2): lateral wrap always (both bc modes are
// laterally periodic); top/bottom ghost rows wrap in all_periodic mode
// and take the supplied Dirichlet values otherwise.
void pad_field(const double* f, int H, int W, BcMode bc, double top,
               double bottom, std::vector<double>& out) {
  const int Wp = W + 2;
  out.assign(static_cast<std::size_t>(H + 2) * Wp, 0.0);
  for (int r = 0; r < H; ++r) {
    double* dst = out.data() + static_cast<std::size_t>(r + 1) * Wp;
    const double* src = f + static_cast<std::size_t>(r) * W;
    std::copy_n(src, W, dst + 1);
    dst[0] = src[W - 1];
    dst[W + 1] = src[0];
  }
  if (bc == BcMode::all_periodic) {
    std::copy_n(out.data() + static_cast<std::size_t>(H) * Wp, Wp, out.data());
    std::copy_n(out.data() + Wp, Wp,
                out.data() + static_cast<std::size_t>(H + 1) * Wp);
  } else {
    std::fill_n(out.data(), Wp, top);
    std::fill_n(out.data() + static_cast<std::size_t>(H + 1) * Wp, Wp, bottom);
  }
}

// Laplacian of a padded field, scaled by 1/dx^2.
void laplacian(const std::vector<double>& padded, int H, int W, double dx,
               std::vector<double>& out) {
  const int Wp = W + 2;
  out.resize(static_cast<std::size_t>(H) * W);
  const auto& k = simd::kernels();
  for (int r = 0; r < H; ++r) {
    const double* up = padded.data() + static_cast<std::size_t>(r) * Wp + 1;
    const double* mid = padded.data() + static_cast<std::size_t>(r + 1) * Wp;
    const double* down = padded.data() + static_cast<std::size_t>(r + 2) * Wp + 1;
    k.lap5_row(W, up, mid, down, out.data() + static_cast<std::size_t>(r) * W);
  }
  const double inv = 1.0 / (dx * dx);
  for (double& v : out) v *= inv;
}

}  // namespace

void SolverConfig::validate() const {
  if (safety <= 0.0 || safety > 1.0)
    throw std::invalid_argument("SolverConfig: safety out of (0, 1]");
  if (output_every < 1)
    throw std::invalid_argument("SolverConfig: output_every < 1");
  if (cA_ref <= 0.0 || cA_ref >= 1.0)
    throw std::invalid_argument("SolverConfig: cA_ref out of (0, 1)");
}

double bulk_free_energy(double cA, double cB, Phase phase,
                        const PhysicsParams& p) {
  const double cC = 1.0 - cA - cB;
  const bool solid = (phase == Phase::solid);
  const double oAC = solid ? p.omega_solid_AC : p.omega_liquid_AC;
  const double oBC = solid ? p.omega_solid_BC : p.omega_liquid_BC;
  const double oAB = solid ? p.omega_solid_AB : p.omega_liquid_AB;
  return p.RT_v * (cA * std::log(cA) + cB * std::log(cB) + cC * std::log(cC)) +
         oAC * cA * cC + oBC * cB * cC + oAB * cA * cB;
}

void bulk_free_energy_deriv(double cA, double cB, Phase phase,
                            const PhysicsParams& p, double& dfA, double& dfB) {
  const double cC = 1.0 - cA - cB;
  const bool solid = (phase == Phase::solid);
  const double oAC = solid ? p.omega_solid_AC : p.omega_liquid_AC;
  const double oBC = solid ? p.omega_solid_BC : p.omega_liquid_BC;
  const double oAB = solid ? p.omega_solid_AB : p.omega_liquid_AB;
  dfA = p.RT_v * (std::log(cA) - std::log(cC)) + oAC * (cC - cA) - oBC * cB +
        oAB * cB;
  dfB = p.RT_v * (std::log(cB) - std::log(cC)) + oBC * (cC - cB) - oAC * cA +
        oAB * cA;
}

std::vector<double> variational_derivative_phi(const FieldState& s,
                                               const PhysicsParams& p,
                                               const SolverConfig& cfg) {
  std::vector<double> padded, lap;
  pad_field(s.phi.data(), s.H, s.W, cfg.bc_mode, 0.0, 1.0, padded);
  laplacian(padded, s.H, s.W, s.dx, lap);

  std::vector<double> out(s.cells());
  for (std::size_t i = 0; i < s.cells(); ++i) {
    double a = s.cA[i], b = s.cB[i];
    clip_pair(a, b, p.clip_delta);
    const double fS = bulk_free_energy(a, b, Phase::solid, p);
    const double fL = bulk_free_energy(a, b, Phase::liquid, p);
    out[i] = p.W_dw * well_g_prime(s.phi[i]) - p.eps2 * lap[i] +
             interp_h_prime(s.phi[i]) * (fS - fL);
  }
  return out;
}

void chemical_potentials(const FieldState& s, const PhysicsParams& p,
                         const SolverConfig& cfg, std::vector<double>& muA,
                         std::vector<double>& muB) {
  std::vector<double> padA, padB, lapA, lapB;
  pad_field(s.cA.data(), s.H, s.W, cfg.bc_mode, 0.0, cfg.cA_ref, padA);
  pad_field(s.cB.data(), s.H, s.W, cfg.bc_mode, 0.0, 1.0 - cfg.cA_ref, padB);
  laplacian(padA, s.H, s.W, s.dx, lapA);
  laplacian(padB, s.H, s.W, s.dx, lapB);

  muA.resize(s.cells());
  muB.resize(s.cells());
  for (std::size_t i = 0; i < s.cells(); ++i) {
    double a = s.cA[i], b = s.cB[i];
    clip_pair(a, b, p.clip_delta);
    double dSa, dSb, dLa, dLb;
    bulk_free_energy_deriv(a, b, Phase::solid, p, dSa, dSb);
    bulk_free_energy_deriv(a, b, Phase::liquid, p, dLa, dLb);
    const double h = interp_h(s.phi[i]);
    muA[i] = h * dSa + (1.0 - h) * dLa - p.kappa_c * lapA[i];
    muB[i] = h * dSb + (1.0 - h) * dLb - p.kappa_c * lapB[i];
  }
}

double stable_dt(const PhysicsParams& p, double dx, double safety) {
  const double m_phi_eff = p.M_phi * kPi * kPi / (8.0 * p.eta);
  double bound = std::numeric_limits<double>::infinity();
  if (p.kappa_c > 0.0)
    bound = std::min(bound, std::pow(dx, 4) / (16.0 * p.M_L * p.kappa_c));
  bound = std::min(bound, dx * dx / (4.0 * m_phi_eff * p.eps2));
  bound = std::min(bound, dx * dx / (4.0 * p.M_L * p.RT_v));
  return safety * bound;
}

FieldState step(const FieldState& s, const PhysicsParams& p,
                const SolverConfig& cfg) {
  const int H = s.H, W = s.W, Wp = W + 2;
  double dt = cfg.dt;
  const double dt_max = stable_dt(p, s.dx, cfg.safety);
  if (dt <= 0.0) dt = dt_max;
  else if (cfg.enforce_stable_dt && dt > dt_max)
    throw std::invalid_argument("step: dt exceeds stable_dt bound");

  // Allen-Cahn update for phi.
  const std::vector<double> dFdphi = variational_derivative_phi(s, p, cfg);
  const double rate = p.M_phi * kPi * kPi / (8.0 * p.eta);

  // Chemical potentials and degenerate mobility products on the grid.
  std::vector<double> muA, muB;
  chemical_potentials(s, p, cfg, muA, muB);

  std::vector<double> mAA(s.cells()), mAB(s.cells()), mBB(s.cells());
  for (std::size_t i = 0; i < s.cells(); ++i) {
    const double m = p.M_L + (p.M_S - p.M_L) * interp_h(s.phi[i]);
    const double a = s.cA[i], b = s.cB[i];
    mAA[i] = m * a * (1.0 - a);
    mAB[i] = -m * a * b;
    mBB[i] = m * b * (1.0 - b);
  }

  // Ghost-cell potentials use the bulk terms only (no gradient term);
  // ghost mobilities come from the ghost compositions. In physical mode
  // the top ghost is pure liquid C, so its mobility products vanish.
  double muA_top = 0, muB_top = 0, muA_bot = 0, muB_bot = 0;
  double mAA_bot = 0, mAB_bot = 0, mBB_bot = 0;
  if (cfg.bc_mode == BcMode::physical) {
    const double d = p.clip_delta;
    double a_top = 0.0, b_top = 0.0;
    clip_pair(a_top, b_top, d);
    double dLa, dLb;
    bulk_free_energy_deriv(a_top, b_top, Phase::liquid, p, dLa, dLb);
    muA_top = dLa;  // h(0) = 0
    muB_top = dLb;
    const double aref = cfg.cA_ref, bref = 1.0 - cfg.cA_ref;
    double a_bot = aref, b_bot = bref;
    clip_pair(a_bot, b_bot, d);
    double dSa, dSb;
    bulk_free_energy_deriv(a_bot, b_bot, Phase::solid, p, dSa, dSb);
    muA_bot = dSa;  // h(1) = 1
    muB_bot = dSb;
    mAA_bot = p.M_S * aref * (1.0 - aref);
    mAB_bot = -p.M_S * aref * bref;
    mBB_bot = p.M_S * bref * (1.0 - bref);
  }

  std::vector<double> muAP, muBP, mAAP, mABP, mBBP;
  pad_field(muA.data(), H, W, cfg.bc_mode, muA_top, muA_bot, muAP);
  pad_field(muB.data(), H, W, cfg.bc_mode, muB_top, muB_bot, muBP);
  pad_field(mAA.data(), H, W, cfg.bc_mode, 0.0, mAA_bot, mAAP);
  pad_field(mAB.data(), H, W, cfg.bc_mode, 0.0, mAB_bot, mABP);
  pad_field(mBB.data(), H, W, cfg.bc_mode, 0.0, mBB_bot, mBBP);

  FieldState out(H, W, s.dx);
  out.time = s.time + dt;

  const double inv_dx2 = 1.0 / (s.dx * s.dx);
  auto P = [Wp](const std::vector<double>& f, int r, int c) {
    return f[static_cast<std::size_t>(r + 1) * Wp + (c + 1)];
  };

  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const std::size_t i = s.idx(r, c);
      // Face-centered fluxes with arithmetic-mean face mobilities,
      // summed over the four faces of cell (r, c).
      double divA = 0.0, divB = 0.0;
      const int nr[4] = {r - 1, r + 1, r, r};
      const int nc[4] = {c, c, c - 1, c + 1};
      const double muA_p = P(muAP, r, c), muB_p = P(muBP, r, c);
      const double mAA_p = P(mAAP, r, c), mAB_p = P(mABP, r, c),
                   mBB_p = P(mBBP, r, c);
      for (int f = 0; f < 4; ++f) {
        const double dmuA = P(muAP, nr[f], nc[f]) - muA_p;
        const double dmuB = P(muBP, nr[f], nc[f]) - muB_p;
        const double fAA = 0.5 * (mAA_p + P(mAAP, nr[f], nc[f]));
        const double fAB = 0.5 * (mAB_p + P(mABP, nr[f], nc[f]));
        const double fBB = 0.5 * (mBB_p + P(mBBP, nr[f], nc[f]));
        divA += fAA * dmuA + fAB * dmuB;
        divB += fAB * dmuA + fBB * dmuB;
      }
      double phi_n = s.phi[i] - dt * rate * dFdphi[i];
      double a_n = s.cA[i] + dt * inv_dx2 * divA;
      double b_n = s.cB[i] + dt * inv_dx2 * divB;

      // Divergence guard before the invariant clamp: bounded fields can
      // only leave [0,1] by an O(1) overshoot in a stable run.
      if (!(std::abs(phi_n) < 10.0) || !(std::abs(a_n) < 10.0) ||
          !(std::abs(b_n) < 10.0)) {
        const char* name = !(std::abs(phi_n) < 10.0) ? "phi"
                           : !(std::abs(a_n) < 10.0) ? "cA"
                                                     : "cB";
        throw std::runtime_error(
            std::string("step: instability detected in field ") + name +
            " at cell (" + std::to_string(r) + "," + std::to_string(c) + ")");
      }
      phi_n = std::clamp(phi_n, 0.0, 1.0);
      a_n = std::clamp(a_n, 0.0, 1.0);
      b_n = std::clamp(b_n, 0.0, 1.0);
      if (a_n + b_n > 1.0) {
        const double sc = 1.0 / (a_n + b_n);
        a_n *= sc;
        b_n *= sc;
      }
      out.phi[i] = phi_n;
      out.cA[i] = a_n;
      out.cB[i] = b_n;
    }
  }

  auto check = [&](const std::vector<double>& f, const char* name) {
    for (double v : f)
      if (!std::isfinite(v))
        throw std::runtime_error(std::string("step: instability, non-finite ") +
                                 name + " at t=" + std::to_string(out.time));
  };
  check(out.phi, "phi");
  check(out.cA, "cA");
  check(out.cB, "cB");
  return out;
}

std::vector<FieldState> run(const FieldState& s0, const PhysicsParams& p,
                            const SolverConfig& cfg, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("run: n_steps < 1");
  cfg.validate();
  p.validate();
  std::vector<FieldState> snaps;
  snaps.push_back(s0);
  FieldState cur = s0;
  for (int i = 1; i <= n_steps; ++i) {
    try {
      cur = step(cur, p, cfg);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("run: step " + std::to_string(i) + ": " +
                               e.what());
    }
    if (i % cfg.output_every == 0 || i == n_steps) snaps.push_back(cur);
  }
  return snaps;
}

}  // namespace lmd
