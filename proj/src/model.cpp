#include "fleetdispatch/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fleetdispatch {

AvailabilitySet::AvailabilitySet(std::vector<Interval> intervals) {
  for (const auto& iv : intervals) {
    if (!std::isfinite(iv.start) || !std::isfinite(iv.end))
      throw std::invalid_argument("availability interval must be finite");
    if (iv.start < 0.0)
      throw std::invalid_argument("availability interval starts before 0");
    if (!(iv.start < iv.end))
      throw std::invalid_argument(
          "availability interval must have positive length");
  }
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) {
              return a.start < b.start;
            });
  for (const auto& iv : intervals) {
    if (!intervals_.empty() && iv.start <= intervals_.back().end) {
      intervals_.back().end = std::max(intervals_.back().end, iv.end);
    } else {
      intervals_.push_back(iv);
    }
  }
}

bool AvailabilitySet::contains(double t) const {
  for (const auto& iv : intervals_) {
    if (t < iv.start) return false;
    if (t <= iv.end) return true;
  }
  return false;
}

double AvailabilitySet::measure() const {
  double m = 0.0;
  for (const auto& iv : intervals_) m += iv.length();
  return m;
}

double AvailabilitySet::measure_intersection(const Interval& w) const {
  double m = 0.0;
  for (const auto& iv : intervals_) {
    const double lo = std::max(iv.start, w.start);
    const double hi = std::min(iv.end, w.end);
    if (hi > lo) m += hi - lo;
  }
  return m;
}

AvailabilitySet AvailabilitySet::complement(double horizon) const {
  std::vector<Interval> out;
  double cursor = 0.0;
  for (const auto& iv : intervals_) {
    if (iv.start > cursor) out.push_back(Interval{cursor, iv.start});
    cursor = std::max(cursor, iv.end);
  }
  if (cursor < horizon) out.push_back(Interval{cursor, horizon});
  return AvailabilitySet(std::move(out));
}

AvailabilitySet AvailabilitySet::restricted(double tau) const {
  std::vector<Interval> out;
  for (const auto& iv : intervals_) {
    if (iv.start >= tau) break;
    out.push_back(Interval{iv.start, std::min(iv.end, tau)});
  }
  return AvailabilitySet(std::move(out));
}

std::vector<double> AvailabilitySet::endpoints() const {
  std::vector<double> out;
  out.reserve(2 * intervals_.size());
  for (const auto& iv : intervals_) {
    out.push_back(iv.start);
    out.push_back(iv.end);
  }
  return out;
}

Fleet::Fleet(std::vector<Device> devs, double horizon_hours)
    : devices(std::move(devs)), horizon(horizon_hours) {
  if (devices.empty()) throw std::invalid_argument("fleet has no devices");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  for (const auto& dev : devices) {
    if (!(dev.rated_power > 0.0))
      throw std::invalid_argument("device " + dev.id +
                                  ": rated power must be positive");
    if (dev.initial_energy < 0.0)
      throw std::invalid_argument("device " + dev.id +
                                  ": initial energy must be nonnegative");
    if (!(dev.efficiency > 0.0) || dev.efficiency > 1.0)
      throw std::invalid_argument("device " + dev.id +
                                  ": efficiency must be in (0, 1]");
    if (!dev.availability.empty() &&
        dev.availability.intervals().back().end > horizon + 1e-12)
      throw std::invalid_argument("device " + dev.id +
                                  ": availability exceeds horizon");
  }
}

StateVector Fleet::initial_state() const {
  StateVector x(devices.size());
  for (std::size_t i = 0; i < devices.size(); ++i)
    x[i] = devices[i].initial_energy / devices[i].rated_power;
  return x;
}

DemandProfile::DemandProfile(std::vector<double> bps, std::vector<double> vals)
    : breakpoints(std::move(bps)), values(std::move(vals)) {
  if (breakpoints.size() < 2)
    throw std::invalid_argument("demand profile needs at least two breakpoints");
  if (values.size() + 1 != breakpoints.size())
    throw std::invalid_argument("demand profile: values/breakpoints mismatch");
  if (breakpoints.front() != 0.0)
    throw std::invalid_argument("demand profile must start at t = 0");
  for (std::size_t m = 0; m + 1 < breakpoints.size(); ++m)
    if (!(breakpoints[m] < breakpoints[m + 1]))
      throw std::invalid_argument("demand breakpoints must strictly increase");
  for (double v : values)
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("demand values must be finite and >= 0");
}

double DemandProfile::value_at(double t) const {
  if (t <= breakpoints.front()) return values.front();
  if (t >= breakpoints.back()) return values.back();
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  return values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

double DemandProfile::total_energy() const {
  double e = 0.0;
  for (std::size_t m = 0; m < values.size(); ++m)
    e += values[m] * (breakpoints[m + 1] - breakpoints[m]);
  return e;
}

DemandProfile DemandProfile::restricted(double tau) const {
  if (!(tau > 0.0) || tau > horizon() + 1e-12)
    throw std::invalid_argument("restricted: tau outside (0, horizon]");
  std::vector<double> bps, vals;
  bps.push_back(0.0);
  for (std::size_t m = 0; m < values.size(); ++m) {
    if (breakpoints[m + 1] >= tau) {
      vals.push_back(values[m]);
      bps.push_back(tau);
      break;
    }
    vals.push_back(values[m]);
    bps.push_back(breakpoints[m + 1]);
  }
  return DemandProfile(std::move(bps), std::move(vals));
}

StateVector to_time_to_discharge(const std::vector<double>& energy,
                                 const Fleet& fleet) {
  if (energy.size() != fleet.size())
    throw std::invalid_argument("to_time_to_discharge: dimension mismatch");
  StateVector x(energy.size());
  for (std::size_t i = 0; i < energy.size(); ++i)
    x[i] = energy[i] / fleet.devices[i].rated_power;
  return x;
}

std::vector<double> from_time_to_discharge(const StateVector& x,
                                           const Fleet& fleet) {
  if (x.size() != fleet.size())
    throw std::invalid_argument("from_time_to_discharge: dimension mismatch");
  std::vector<double> e(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    e[i] = x[i] * fleet.devices[i].rated_power;
  return e;
}

double external_energy(double internal_energy, double efficiency) {
  if (!(efficiency > 0.0) || efficiency > 1.0)
    throw std::invalid_argument("efficiency must be in (0, 1]");
  if (internal_energy < 0.0)
    throw std::invalid_argument("internal energy must be nonnegative");
  return efficiency * internal_energy;
}

std::vector<Group> group_partition(const StateVector& x, double tol) {
  if (tol < 0.0) throw std::invalid_argument("group tolerance must be >= 0");
  std::vector<int> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&x](int a, int b) { return x[a] > x[b]; });
  std::vector<Group> groups;
  for (int idx : order) {
    // Adjacent-gap chaining on the sorted values realizes the transitive
    // closure of |x_i - x_j| <= tol.
    if (groups.empty() ||
        x[groups.back().members.back()] - x[idx] > tol) {
      groups.push_back(Group{x[idx], {idx}});
    } else {
      groups.back().members.push_back(idx);
    }
  }
  return groups;
}

}  // namespace fleetdispatch
