#pragma once
// Autoregressive surrogate evolution: solver warm start, prediction
// feedback, and dynamic bottom-of-domain extension.

#include <vector>

#include "lmd/field.hpp"
#include "lmd/solver.hpp"
#include "lmd/unet.hpp"

namespace lmd {

struct RolloutConfig {
  int n_steps = 0;
  ConditioningInput theta;
  int margin_rows = 8;   // extend when liquid reaches H - margin
  int grow_rows = 16;    // must keep H divisible by 2^levels
  int max_height = 1 << 14;
  double warm_start_time = 0.0;
  double dtau_time = 0.0;  // physical time advanced per surrogate step
                           // (0: fall back to theta.dtau)

  void validate(int unet_levels) const;
};

// Runs the reference solver from state0 until warm_start_time; the
// returned interface must be roughened (columnwise spread >= 1 cell).
FieldState warm_start(const FieldState& state0, const PhysicsParams& p,
                      const SolverConfig& scfg, double warm_start_time);

// Max minus min over columns of the first row from the top with
// phi >= 0.5 (H when a column has none).
int interface_row_spread(const FieldState& s);

// Deepest row index holding liquid (phi < 0.5), or -1 for all-solid.
int deepest_liquid_row(const FieldState& s);

// Appends k bulk-solid rows (phi=1, cA=cA_ref, cB=1-cA_ref) at the
// bottom; existing rows and time are untouched.
FieldState extend_domain(const FieldState& s, int k, double cA_ref,
                         int max_height = 1 << 30);

// state <- net(state, theta), n_steps times, extending the domain
// whenever the liquid front comes within margin_rows of the bottom.
// Returns all states including state0.
std::vector<FieldState> rollout(UNet& net, const FieldState& state0,
                                const RolloutConfig& cfg);

}  // namespace lmd
