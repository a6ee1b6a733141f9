#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

// Core domain types for storage-fleet dispatch. Units are fixed throughout
// the library: hours for time, kW for power, kWh for energy. Time-to-discharge
// (stored energy divided by rated power) is therefore in hours.

namespace fleetdispatch {

using StateVector = std::vector<double>;  // per-device time-to-discharge, hours
using RateVector = std::vector<double>;   // per-device power, kW

/// Closed time interval [start, end] with positive length, in hours.
struct Interval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool contains(double t) const { return t >= start && t <= end; }
};

/// Finite union of disjoint, non-touching, positive-length closed intervals.
/// Construction normalizes arbitrary input: intervals are sorted and
/// overlapping or touching intervals are merged. The empty set is valid.
class AvailabilitySet {
 public:
  AvailabilitySet() = default;
  explicit AvailabilitySet(std::vector<Interval> intervals);

  static AvailabilitySet full(double horizon) {
    return AvailabilitySet({Interval{0.0, horizon}});
  }

  const std::vector<Interval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  std::size_t size() const { return intervals_.size(); }

  bool contains(double t) const;
  double measure() const;

  /// Lebesgue measure of the intersection with window w.
  double measure_intersection(const Interval& w) const;

  /// Complement within [0, horizon], again a finite union of intervals.
  AvailabilitySet complement(double horizon) const;

  /// Intersection with [0, tau]; used for window truncation.
  AvailabilitySet restricted(double tau) const;

  /// All interval endpoints, ascending.
  std::vector<double> endpoints() const;

 private:
  std::vector<Interval> intervals_;
};

struct Device {
  std::string id;
  double rated_power = 0.0;     // P̄, kW, > 0
  double initial_energy = 0.0;  // externally measured, kWh, >= 0
  double efficiency = 1.0;      // round-trip, in (0, 1]
  AvailabilitySet availability;
};

/// A fleet of devices dispatched over the horizon [0, horizon].
struct Fleet {
  std::vector<Device> devices;
  double horizon = 0.0;  // τ̄, hours

  Fleet() = default;
  Fleet(std::vector<Device> devs, double horizon_hours);

  std::size_t size() const { return devices.size(); }

  /// Initial time-to-discharge vector x(0) = E(0) / P̄.
  StateVector initial_state() const;
};

/// Piecewise-constant nonnegative power demand over the horizon:
/// value values[m] holds on [breakpoints[m], breakpoints[m+1]).
struct DemandProfile {
  std::vector<double> breakpoints;  // t_0 = 0 < t_1 < ... < t_M = horizon
  std::vector<double> values;       // kW, size M

  DemandProfile() = default;
  DemandProfile(std::vector<double> bps, std::vector<double> vals);

  double horizon() const { return breakpoints.back(); }
  double value_at(double t) const;
  double total_energy() const;  // kWh

  /// Demand restricted to [0, tau]: trailing pieces dropped, last breakpoint
  /// forced to tau. Requires 0 < tau <= horizon().
  DemandProfile restricted(double tau) const;
};

/// Converts external energy (kWh) to time-to-discharge (hours), per device.
StateVector to_time_to_discharge(const std::vector<double>& energy,
                                 const Fleet& fleet);
std::vector<double> from_time_to_discharge(const StateVector& x,
                                           const Fleet& fleet);

/// External energy from internally measured energy: E = efficiency * internal.
double external_energy(double internal_energy, double efficiency);

/// One equal-time-to-discharge group: devices whose x values coincide
/// within the partition tolerance.
struct Group {
  double value = 0.0;        // common time-to-discharge τ
  std::vector<int> members;  // device indices
};

inline constexpr double kDefaultGroupTol = 1e-9;

/// Partition of device indices by equal time-to-discharge, ordered by
/// strictly decreasing value. Indices i, j share a group iff |x_i - x_j|
/// <= tol under transitive closure; a group's value is its largest member.
std::vector<Group> group_partition(const StateVector& x,
                                   double tol = kDefaultGroupTol);

inline double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double inf_dist(const std::vector<double>& a,
                       const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("inf_dist: dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace fleetdispatch
