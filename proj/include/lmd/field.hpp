#pragma once
// Simulation state, physical parameter records, and the shared
// relative-L2 metric.

#include <cstdint>
#include <span>
#include <vector>

#include "lmd/tensor.hpp"

namespace lmd {

// (phi, c_A, c_B) on an H x W grid. phi is 1 in solid, 0 in liquid;
// c_C = 1 - c_A - c_B is implicit. Row 0 is the top of the domain.
struct FieldState {
  int H = 0, W = 0;
  double dx = 1.0;
  double time = 0.0;  // dimensionless simulation time
  std::vector<double> phi, cA, cB;

  FieldState() = default;
  FieldState(int h, int w, double dx_);

  std::size_t cells() const { return static_cast<std::size_t>(H) * W; }
  std::size_t idx(int r, int c) const {
    return static_cast<std::size_t>(r) * W + c;
  }
};

// Constants of the free-energy functional and mobilities. Defaults are
// the tuned dimensionless dealloying set for dx = 1: the solvent C is
// insoluble in the solid, A is insoluble and B soluble in the liquid,
// which drives selective dissolution of B.
struct PhysicsParams {
  double M_phi = 1.0;      // interface mobility
  double eta = 1.0;        // interface width (pi^2/8eta prefactor)
  double eps2 = 1.0;       // gradient-energy coefficient for phi
  double W_dw = 1.0;       // double-well height
  double kappa_c = 0.25;   // gradient-energy coefficient for c_A, c_B
  double RT_v = 1.0;       // thermal energy scale
  // Regular-solution interaction parameters, per phase.
  double omega_solid_AC = 3.5;
  double omega_solid_BC = 3.5;
  double omega_solid_AB = 0.0;
  double omega_liquid_AC = 3.5;
  double omega_liquid_BC = 0.0;
  double omega_liquid_AB = 0.0;
  double M_S = 1e-3;       // solid mobility scale
  double M_L = 1.0;        // liquid mobility scale
  double clip_delta = 1e-6;  // concentration floor before logarithms

  void validate() const;  // throws std::invalid_argument
};

// Conditioning pair theta for the surrogate: the time span between
// network input and output (in snapshot units) and the pre-dealloying
// reference concentration of species A.
struct ConditioningInput {
  double dtau = 1.0;
  double cA_ref = 0.2;
};

// Admissible ranges for theta; used to normalize conditioning inputs.
struct ConditioningRange {
  double dtau_min = 1.0, dtau_max = 4.0;
  double ca_min = 0.2, ca_max = 0.4;
};

// Flat solid below interface_row, pure liquid C above. Concentrations in
// the solid are cA_ref / 1-cA_ref plus seeded uniform noise of amplitude
// noise_amp; phi gets no noise.
FieldState initial_state(int H, int W, double dx, double cA_ref,
                         int interface_row, double noise_amp,
                         std::uint64_t seed);

// ||a - b||_2 / max(||b||_2, floor)
double relative_l2(std::span<const double> a, std::span<const double> b,
                   double floor = 1e-12);

// Channel packing for the network, order (phi, c_A, c_B).
Tensor4 to_tensor(const FieldState& s);

// Inverse of to_tensor. Values must lie in [0,1]; where c_A + c_B
// exceeds 1 by at most clip_tol the pair is rescaled proportionally,
// a larger excess is a validation error.
FieldState from_tensor(const Tensor4& t, double dx, double time,
                       double clip_tol = 1e-3);

}  // namespace lmd
