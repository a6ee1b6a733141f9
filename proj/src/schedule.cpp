#include "fleetdispatch/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace fleetdispatch {

namespace {

std::size_t segment_index(const std::vector<double>& bps, double t) {
  if (t <= bps.front()) return 0;
  if (t >= bps.back()) return bps.size() - 2;
  auto it = std::upper_bound(bps.begin(), bps.end(), t);
  return static_cast<std::size_t>(it - bps.begin()) - 1;
}

}  // namespace

double DispatchSchedule::rate_at(std::size_t device, double t) const {
  return rates[segment_index(breakpoints, t)][device];
}

double DispatchSchedule::total_rate_at(double t) const {
  const auto& row = rates[segment_index(breakpoints, t)];
  double s = 0.0;
  for (double u : row) s += u;
  return s;
}

double DispatchSchedule::energy_of(std::size_t device) const {
  double e = 0.0;
  for (std::size_t k = 0; k < rates.size(); ++k)
    e += rates[k][device] * (breakpoints[k + 1] - breakpoints[k]);
  return e;
}

void DispatchSchedule::write_csv(std::ostream& os, const Fleet& fleet,
                                 const DemandProfile* demand) const {
  const std::size_t n = device_count();
  os << "t";
  for (std::size_t i = 1; i <= n; ++i) os << ",x_" << i;
  for (std::size_t i = 1; i <= n; ++i) os << ",u_" << i;
  os << ",shortfall\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    os << buf;
  };
  StateVector x = fleet.initial_state();
  for (std::size_t k = 0; k < breakpoints.size(); ++k) {
    put(breakpoints[k]);
    for (std::size_t i = 0; i < n; ++i) {
      os << ',';
      put(x[i]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = k < rates.size() ? rates[k][i] : 0.0;
      os << ',';
      put(u);
      total += u;
    }
    os << ',';
    double sf = 0.0;
    if (demand && k < rates.size()) {
      const double mid = breakpoints[k] + 0.5 * (breakpoints[k + 1] - breakpoints[k]);
      sf = std::max(0.0, demand->value_at(mid) - total);
    }
    put(sf);
    os << '\n';
    if (k < rates.size()) {
      const double len = breakpoints[k + 1] - breakpoints[k];
      for (std::size_t i = 0; i < n; ++i)
        x[i] -= rates[k][i] / fleet.devices[i].rated_power * len;
    }
  }
}

std::string check_schedule(const DispatchSchedule& schedule, const Fleet& fleet,
                           const DemandProfile& demand,
                           bool require_demand_match, double tol) {
  std::ostringstream err;
  if (schedule.device_count() != fleet.size()) return "device count mismatch";
  if (std::abs(schedule.horizon() - demand.horizon()) > 1e-9)
    return "schedule horizon does not match demand horizon";
  std::vector<double> energy(fleet.size(), 0.0);
  for (std::size_t k = 0; k < schedule.segment_count(); ++k) {
    const double a = schedule.breakpoints[k];
    const double b = schedule.breakpoints[k + 1];
    const double mid = a + 0.5 * (b - a);
    double total = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      const double u = schedule.rates[k][i];
      const auto& dev = fleet.devices[i];
      if (u < -tol || u > dev.rated_power + tol) {
        err << "rate bound violated: device " << i << " segment " << k;
        return err.str();
      }
      if (u > tol && !dev.availability.contains(mid)) {
        err << "support violated: device " << i << " active at t=" << mid;
        return err.str();
      }
      energy[i] += u * (b - a);
      total += u;
    }
    if (require_demand_match &&
        std::abs(total - demand.value_at(mid)) > tol * (1.0 + demand.value_at(mid))) {
      err << "demand mismatch on segment " << k << ": " << total << " vs "
          << demand.value_at(mid);
      return err.str();
    }
  }
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    if (energy[i] > fleet.devices[i].initial_energy + tol * (1.0 + energy[i])) {
      err << "energy budget violated: device " << i << " delivers " << energy[i]
          << " kWh of " << fleet.devices[i].initial_energy;
      return err.str();
    }
  }
  return {};
}

}  // namespace fleetdispatch
