#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fleetdispatch/model.hpp"

namespace fleetdispatch {

/// Per-device piecewise-constant dispatch rates on a shared breakpoint grid:
/// rates[seg][dev] holds on [breakpoints[seg], breakpoints[seg+1]).
struct DispatchSchedule {
  std::vector<double> breakpoints;
  std::vector<std::vector<double>> rates;  // kW

  std::size_t device_count() const {
    return rates.empty() ? 0 : rates.front().size();
  }
  std::size_t segment_count() const { return rates.size(); }
  double horizon() const { return breakpoints.back(); }

  double rate_at(std::size_t device, double t) const;
  double total_rate_at(double t) const;

  /// Energy delivered by one device over the whole grid (kWh).
  double energy_of(std::size_t device) const;

  /// Same layout as the trajectory CSV: t, x_1..x_N, u_1..u_N, shortfall.
  /// States are the real per-device time-to-discharge under this schedule
  /// from the fleet's initial energies; shortfall needs the demand profile
  /// and is zero when omitted.
  void write_csv(std::ostream& os, const Fleet& fleet,
                 const DemandProfile* demand = nullptr) const;
};

/// Checks the feasible-set constraints: rate bounds, support inside the
/// availability sets, per-device energy budgets and (optionally) exact
/// demand match on every segment. Returns an empty string when admissible,
/// otherwise a description of the first violation.
std::string check_schedule(const DispatchSchedule& schedule, const Fleet& fleet,
                           const DemandProfile& demand, bool require_demand_match,
                           double tol = 1e-9);

}  // namespace fleetdispatch
