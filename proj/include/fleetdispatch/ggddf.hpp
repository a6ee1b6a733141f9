#pragma once

#include <iosfwd>
#include <vector>

#include "fleetdispatch/model.hpp"

// Greedy-Greatest-Discharge-Duration-First dispatch: the availability-aware
// feedback policy, its full-availability counterpart, and the exact
// event-driven closed-loop simulator. Demand is served group by group in
// order of decreasing time-to-discharge; the marginal group splits the
// remaining demand proportionally to rated power. In the availability-aware
// policy only available devices count toward served demand, but every member
// of a discharging group is discharged, available or not — that fictitious
// off-window energy is what the fixed-point machinery accounts for.

namespace fleetdispatch {

struct PolicyResult {
  RateVector u;            // kW per device, in [0, P̄_i]
  double shortfall = 0.0;  // kW of demand not servable by available capacity
};

/// Feedback policy evaluated at time t. With availability_aware set this is
/// the time-varying policy (available devices sum to min(d, available
/// capacity)); otherwise availability is ignored and all devices sum to
/// min(d, total capacity).
PolicyResult policy_rates(double t, const StateVector& x, double demand,
                          const Fleet& fleet, bool availability_aware,
                          double group_tol = kDefaultGroupTol);

/// Pointwise augmented demand: d(t) plus the rates the availability-aware
/// policy assigns to devices that are off-window at t.
double augmented_demand_pointwise(double t, const StateVector& x,
                                  double demand, const Fleet& fleet);

/// Event-driven record of a closed-loop run. States are piecewise-linear
/// between events, rates and shortfall piecewise-constant on each
/// (times[k], times[k+1]).
struct Trajectory {
  std::vector<double> times;                // t_0 = 0, ..., t_K
  std::vector<StateVector> states;          // x at each event time
  std::vector<RateVector> rates;            // per segment, size K
  std::vector<double> shortfall;            // kW per segment, size K
  bool stopped_early = false;               // stopped at a zero crossing

  std::size_t device_count() const { return states.empty() ? 0 : states.front().size(); }
  std::size_t segment_count() const { return rates.size(); }
  double end_time() const { return times.back(); }

  /// State at an arbitrary time by linear interpolation (exact, the true
  /// path is piecewise linear). Clamps to [times.front(), times.back()].
  StateVector state_at(double t) const;

  /// CSV export: t, x_1..x_N, u_1..u_N, shortfall. The terminal row carries
  /// zero rates.
  void write_csv(std::ostream& os) const;
};

struct SimulateOptions {
  bool availability_aware = true;
  bool allow_negative = false;
  double group_tol = kDefaultGroupTol;
  // Event-count guard: merges only reduce group count, so the loop is
  // finitely bounded; exceeding the margin signals a bug.
  int event_cap_factor = 10;
};

/// Exact integration of the closed-loop equations. Events are demand
/// breakpoints, availability boundaries, group merges and zero crossings,
/// all located in closed form; between events states evolve linearly.
/// With allow_negative the run continues past zero crossings (they are
/// still recorded as events); otherwise it stops at the first crossing the
/// policy would push negative.
Trajectory simulate(const Fleet& fleet, const StateVector& x0,
                    const DemandProfile& demand, const SimulateOptions& opts);

/// First-order explicit stepping of the same closed-loop equations, the
/// reference oracle for simulate(). Steps are snapped to demand breakpoints
/// and availability endpoints so only the group logic is approximated;
/// converges to the event-driven output as dt -> 0.
Trajectory simulate_fixed_step(const Fleet& fleet, const StateVector& x0,
                               const DemandProfile& demand,
                               bool availability_aware, bool allow_negative,
                               double dt);

}  // namespace fleetdispatch
