#pragma once
// Explicit finite-difference integrator for the coupled interface /
// concentration dynamics. Serves as training-data generator, warm-start
// provider and ground-truth reference.

#include <vector>

#include "lmd/field.hpp"

namespace lmd {

enum class BcMode {
  physical,     // lateral periodic, Dirichlet ghost rows top/bottom
  all_periodic  // fully periodic (conservation tests)
};

struct SolverConfig {
  double dt = 0.0;        // <= 0 selects stable_dt(params, dx, safety)
  double safety = 0.05;   // stability safety factor
  BcMode bc_mode = BcMode::physical;
  int output_every = 1;   // snapshot cadence in steps
  double cA_ref = 0.2;    // bottom Dirichlet composition (physical mode)
  bool enforce_stable_dt = true;

  void validate() const;
};

enum class Phase { solid, liquid };

// Regular-solution bulk free energy density f_P(c) for one phase.
// Caller clips concentrations away from 0 and 1 before the logarithms.
double bulk_free_energy(double cA, double cB, Phase phase,
                        const PhysicsParams& p);

// d f_P / d c_A and d f_P / d c_B at a (clipped) composition.
void bulk_free_energy_deriv(double cA, double cB, Phase phase,
                            const PhysicsParams& p, double& dfA, double& dfB);

// Interpolation and double-well polynomials.
inline double well_g(double phi) { return phi * phi * (1 - phi) * (1 - phi); }
inline double well_g_prime(double phi) {
  return 2 * phi * (1 - phi) * (1 - 2 * phi);
}
inline double interp_h(double phi) { return phi * phi * (3 - 2 * phi); }
inline double interp_h_prime(double phi) { return 6 * phi * (1 - phi); }

// delta F / delta phi = W_dw g'(phi) - eps2 lap(phi) + h'(phi)(f_S - f_L)
std::vector<double> variational_derivative_phi(const FieldState& s,
                                               const PhysicsParams& p,
                                               const SolverConfig& cfg);

// mu_i = h(phi) df_S/dc_i + (1-h) df_L/dc_i - kappa_c lap(c_i)
void chemical_potentials(const FieldState& s, const PhysicsParams& p,
                         const SolverConfig& cfg, std::vector<double>& muA,
                         std::vector<double>& muB);

// Conservative explicit-Euler stability bound (quartic concentration
// term, interface term, bulk diffusion term).
double stable_dt(const PhysicsParams& p, double dx, double safety = 0.05);

// One explicit Euler step. Throws on NaN/Inf in the result, naming the
// offending field.
FieldState step(const FieldState& s, const PhysicsParams& p,
                const SolverConfig& cfg);

// n_steps of `step`, returning snapshots every output_every steps,
// always including the initial and final states.
std::vector<FieldState> run(const FieldState& s0, const PhysicsParams& p,
                            const SolverConfig& cfg, int n_steps);

}  // namespace lmd
