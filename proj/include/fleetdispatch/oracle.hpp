#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fleetdispatch/model.hpp"
#include "fleetdispatch/schedule.hpp"

// Independent brute-force verification on slot-aligned instances: feasibility,
// minimum unserved energy and maximum time-to-failure via maximum flow in the
// bipartite device/slot network. All arithmetic inside the flow solver is
// scaled-integer and exact; quantities are quantized at 1e-6 kWh and the
// quantization is verified, never silently approximated.

namespace fleetdispatch {

/// Slot-sampled fleet and demand. Slot k covers [k·slot_width, (k+1)·slot_width).
struct DiscreteInstance {
  int slots = 0;
  double slot_width = 0.0;                   // hours
  std::vector<double> supply;                // kWh per device, x_j(0)·P̄_j
  std::vector<double> rated_power;           // kW per device
  std::vector<std::vector<char>> available;  // [device][slot]
  std::vector<double> demand;                // kWh per slot, d_k·slot_width

  std::size_t device_count() const { return supply.size(); }
  double total_demand() const;

  std::string to_json() const;
  static DiscreteInstance from_json(const std::string& text);
};

/// Exact lossless translation onto a slot grid. Every demand breakpoint and
/// availability endpoint must be an integer multiple of slot_width; the call
/// refuses misaligned inputs rather than approximating.
DiscreteInstance discretize(const Fleet& fleet, const DemandProfile& demand,
                            double slot_width);

/// Maximum deliverable energy (kWh): max flow through
/// source → device (supply) → slot (rated_power·slot_width if available) →
/// sink (slot demand).
double maxflow_value(const DiscreteInstance& inst);

bool oracle_feasible(const DiscreteInstance& inst);

/// total demand − max flow; exact for the transportation relaxation, which
/// coincides with the continuous-time optimum on aligned instances.
double oracle_min_unserved(const DiscreteInstance& inst);

/// Largest p such that the instance restricted to slots 0..p−1 is feasible.
/// Linear prefix scan by default; bisection behind the flag.
int oracle_max_ttf(const DiscreteInstance& inst, bool bisect = false);

/// One exact feasible flow decomposed into a dispatch schedule on the slot
/// grid. The seed varies the routing order, so distinct seeds sample distinct
/// optimal schedules. Requires a feasible instance.
DispatchSchedule oracle_schedule(const DiscreteInstance& inst,
                                 std::uint64_t seed);

/// Flow decomposition of a maximum (possibly non-saturating) flow; serves
/// maxflow_value(inst) kWh in total.
DispatchSchedule oracle_best_effort_schedule(const DiscreteInstance& inst,
                                             std::uint64_t seed);

}  // namespace fleetdispatch
