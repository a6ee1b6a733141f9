#pragma once

#include <string>
#include <vector>

#include "fleetdispatch/fixed_point.hpp"
#include "fleetdispatch/model.hpp"
#include "fleetdispatch/schedule.hpp"

// Optimal schedules for unfeasible demand: minimum unserved energy and
// maximum time-to-failure via repeated fixed-point dispatch on shrinking
// windows.

namespace fleetdispatch {

/// Exact integral of the positive part of d − Σ_j u_j over the horizon (kWh).
double unserved_energy(const DispatchSchedule& schedule,
                       const DemandProfile& demand);

struct UnservedResult {
  double unserved = 0.0;       // kWh
  double served = 0.0;         // kWh
  DispatchSchedule schedule;   // admissible: demand-match relaxed
  // First instant the unclipped dispatch would push a real state of charge
  // negative; horizon end when it never does.
  double failure_time = 0.0;
  LambdaVector lambda_bar;
  double fixed_point_residual = 0.0;

  std::string to_json() const;
};

/// Minimum unserved energy: dispatch the fixed-point augmented problem
/// ignoring zero crossings, then clip each device at the instant its true
/// energy budget runs out. The clipped schedule is admissible and its
/// unserved energy — per-segment power shortfall plus terminal overdraws —
/// is the optimum.
UnservedResult min_unserved_energy(const Fleet& fleet,
                                   const DemandProfile& demand,
                                   const FixedPointOptions& opts = {});

/// First time any state goes strictly negative along an allow-negative
/// trajectory, located in closed form on the crossing segment; the horizon
/// end when no state ever does.
double time_to_failure(const Trajectory& traj);

struct TtfOptions {
  double tau_tol = 1e-6;  // hours
  int max_outer = 100;
  FixedPointOptions fixed_point;
};

struct TtfResult {
  double tau_star = 0.0;           // hours
  DispatchSchedule schedule;       // serves demand on [0, tau_star]
  std::vector<double> iterates;    // window sequence, non-increasing
  bool converged = false;

  std::string to_json() const;
};

/// Iterative maximum time-to-failure: solve the fixed point on [0, τ_k],
/// dispatch, set τ_{k+1} to the failure time of that run (first state
/// crossing or first segment whose demand exceeds available rated power) and
/// repeat until the window no longer shrinks. The final window is re-certified
/// so the returned schedule serves demand feasibly on [0, τ*].
TtfResult max_time_to_failure(const Fleet& fleet, const DemandProfile& demand,
                              const TtfOptions& opts = {});

/// Fleet and demand truncated to the window [0, tau].
Fleet truncate_fleet(const Fleet& fleet, double tau);

}  // namespace fleetdispatch
