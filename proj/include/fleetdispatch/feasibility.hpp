#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fleetdispatch/fixed_point.hpp"
#include "fleetdispatch/model.hpp"
#include "fleetdispatch/schedule.hpp"

namespace fleetdispatch {

/// A time set violating the subset inequality: demand integrated over the
/// listed slots exceeds what the fleet can deliver there.
struct SubsetWitness {
  std::vector<int> slots;      // 0-based slot indices
  double slot_width = 0.0;
  double demand_kwh = 0.0;     // left-hand side
  double capacity_kwh = 0.0;   // right-hand side
};

/// Dispatch-test witness: the first device the augmented run pushes negative,
/// or the first segment whose demand exceeds available rated power.
struct StateWitness {
  enum class Kind { negative_state, power_shortfall };
  Kind kind = Kind::negative_state;
  int device = -1;  // -1 for power_shortfall
  double time = 0.0;
};

struct FeasibilityVerdict {
  bool feasible = false;
  std::optional<DispatchSchedule> schedule;
  std::optional<SubsetWitness> subset_witness;
  std::optional<StateWitness> state_witness;

  std::string to_json() const;
};

inline constexpr double kStateTol = 1e-9;  // trajectory nonnegativity slack

/// Constructive feasibility: solve the fixed point, run the augmented
/// trajectory and accept iff it stays nonnegative with no shortfall. On
/// success the returned schedule is the policy restricted to each device's
/// availability set, verified against all feasible-set constraints. Throws
/// FixedPointFailure when the solver does not converge.
FeasibilityVerdict feasibility_by_dispatch(const Fleet& fleet,
                                           const DemandProfile& demand,
                                           const FixedPointOptions& opts = {});

/// As above but reusing an already-computed fixed point.
FeasibilityVerdict verdict_from_fixed_point(const Fleet& fleet,
                                            const DemandProfile& demand,
                                            const FixedPointResult& fp);

struct FixedPointFailure : std::runtime_error {
  FixedPointFailure(const std::string& msg, double residual, int iterations)
      : std::runtime_error(msg), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

inline constexpr int kMaxSubsetSlots = 24;

/// Subset-inequality characterization on a slot grid: enumerates all 2^T
/// subsets with Gray-code incremental sums and accepts iff no inequality is
/// violated. Requires grid alignment and at most kMaxSubsetSlots slots. On
/// feasible verdicts the certifying schedule is materialized by max-flow
/// decomposition of the aligned instance.
FeasibilityVerdict subset_feasibility_check(const Fleet& fleet,
                                            const DemandProfile& demand,
                                            double slot_width);

/// Whether every demand deliverable (ignoring availability) from state x_a is
/// also deliverable from x_b, decided by the sweep test
///   Σ_j min{m, x_bj}·P̄_j ≥ Σ_j min{m, x_aj}·P̄_j  for all m ≥ 0.
/// Checking m at the union of entry values suffices (both sides are
/// piecewise-linear). Negative entries are clamped to zero.
bool flexibility_dominates(const StateVector& x_a, const StateVector& x_b,
                           const Fleet& fleet, double tol = 1e-9);

}  // namespace fleetdispatch
