#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fleetdispatch/ggddf.hpp"
#include "fleetdispatch/model.hpp"

// The map Λ over auxiliary energy fractions and its fixed-point solver.
// λ_i fixes the fictitious extra initial energy of device i at
// λ_i · P̄_i · μ(T \ A_i); the map returns the fraction the policy actually
// discharges outside each device's availability set from that start. A fixed
// point λ̄ yields the augmented initial state x̃(0) and augmented demand d̃
// that turn the availability-constrained dispatch into an unconstrained one.

namespace fleetdispatch {

using LambdaVector = std::vector<double>;  // per-device fraction in [0, 1]

/// Energy each device delivers outside its availability set along an
/// availability-aware, allow-negative trajectory (kWh). Exact: per-segment
/// rates are constant and segments never straddle availability boundaries.
std::vector<double> outside_energy(const Trajectory& traj, const Fleet& fleet);

/// Augmented initial state x̃_j(0) = x_j(0) + λ_j μ(T \ A_j).
StateVector augmented_initial_state(const LambdaVector& lambda,
                                    const Fleet& fleet);

/// One application of Λ: build x̃(0) from λ, run the availability-aware
/// policy over the horizon ignoring zero crossings, and normalize the
/// off-window energies. Devices with μ(T \ A_i) = 0 map to 0. If traj_out is
/// given it receives the trajectory used for the evaluation.
LambdaVector lambda_map(const LambdaVector& lambda, const Fleet& fleet,
                        const DemandProfile& demand,
                        Trajectory* traj_out = nullptr);

struct FixedPointOptions {
  double tol = 1e-8;       // ∞-norm on Λ(λ) − λ
  int max_iter = 1000;
  double damping = 1.0;    // Picard step size; falls back to 0.5 on oscillation
  std::optional<LambdaVector> warm_start;
};

struct FixedPointResult {
  LambdaVector lambda_bar;
  StateVector x_tilde0;
  DemandProfile d_tilde;   // augmented demand on the trajectory's event grid
  int iterations = 0;      // number of Λ evaluations
  double residual = 0.0;   // ∞-norm of Λ(λ̄) − λ̄
  bool converged = false;
  Trajectory trajectory;   // availability-aware, allow-negative run from x̃(0)

  std::string to_json() const;
};

/// Picard iteration λ_{k+1} = (1 − α) λ_k + α Λ(λ_k) from the warm start
/// (default the zero vector) until the residual meets tol. Plain iteration
/// (α = 1) is the default; if the residual is non-monotone over a 10-step
/// window the step size drops to 0.5 for the rest of the solve — any fixed
/// point of the damped map is a fixed point of Λ. On max_iter exhaustion the
/// best iterate seen is returned with converged = false.
FixedPointResult solve_fixed_point(const Fleet& fleet,
                                   const DemandProfile& demand,
                                   const FixedPointOptions& opts = {});

/// Augmented demand as a piecewise-constant profile on the trajectory's
/// event grid: d plus all off-window rates, per segment.
DemandProfile augmented_demand_profile(const Trajectory& traj,
                                       const Fleet& fleet,
                                       const DemandProfile& demand);

}  // namespace fleetdispatch
