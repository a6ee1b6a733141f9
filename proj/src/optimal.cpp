#include "fleetdispatch/optimal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fleetdispatch/feasibility.hpp"
#include "json.hpp"

namespace fleetdispatch {

namespace {

constexpr double kTinyEnergy = 1e-12;

std::vector<double> merge_grids(const std::vector<double>& a,
                                const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end(),
                        [](double x, double y) { return y - x <= 1e-12; }),
            out.end());
  return out;
}

double shortfall_onset(const Trajectory& traj) {
  for (std::size_t k = 0; k < traj.segment_count(); ++k)
    if (traj.shortfall[k] > 1e-12) return traj.times[k];
  return traj.end_time();
}

}  // namespace

double unserved_energy(const DispatchSchedule& schedule,
                       const DemandProfile& demand) {
  if (std::abs(schedule.horizon() - demand.horizon()) > 1e-9)
    throw std::invalid_argument("unserved_energy: horizon mismatch");
  const auto grid = merge_grids(schedule.breakpoints, demand.breakpoints);
  double u = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double mid = grid[k] + 0.5 * (grid[k + 1] - grid[k]);
    const double deficit = demand.value_at(mid) - schedule.total_rate_at(mid);
    if (deficit > 0.0) u += deficit * (grid[k + 1] - grid[k]);
  }
  return u;
}

UnservedResult min_unserved_energy(const Fleet& fleet,
                                   const DemandProfile& demand,
                                   const FixedPointOptions& opts) {
  const FixedPointResult fp = solve_fixed_point(fleet, demand, opts);
  if (!fp.converged)
    throw FixedPointFailure("min_unserved_energy: fixed point did not converge",
                            fp.residual, fp.iterations);
  const Trajectory& traj = fp.trajectory;
  const std::size_t n = fleet.size();

  // Each device's true budget runs out at a closed-form instant of the
  // availability-restricted dispatch; afterwards it delivers nothing.
  std::vector<double> clip_time(n, traj.end_time());
  std::vector<bool> overdrawn(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    double remaining = fleet.devices[i].initial_energy;
    for (std::size_t k = 0; k < traj.segment_count(); ++k) {
      const double a = traj.times[k];
      const double b = traj.times[k + 1];
      const double mid = a + 0.5 * (b - a);
      if (!fleet.devices[i].availability.contains(mid)) continue;
      const double u = traj.rates[k][i];
      if (u <= 0.0) continue;
      const double draw = u * (b - a);
      if (draw > remaining + kTinyEnergy) {
        clip_time[i] = a + remaining / u;
        overdrawn[i] = true;
        break;
      }
      remaining -= draw;
      if (remaining < 0.0) remaining = 0.0;
    }
  }

  std::vector<double> clips;
  for (std::size_t i = 0; i < n; ++i)
    if (overdrawn[i]) clips.push_back(clip_time[i]);
  std::sort(clips.begin(), clips.end());
  const auto grid = merge_grids(traj.times, clips);

  DispatchSchedule sched;
  sched.breakpoints = grid;
  sched.rates.assign(grid.size() - 1, std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double mid = grid[k] + 0.5 * (grid[k + 1] - grid[k]);
    for (std::size_t i = 0; i < n; ++i) {
      if (mid >= clip_time[i]) continue;
      if (!fleet.devices[i].availability.contains(mid)) continue;
      // Rates are constant on trajectory segments, so the lookup is exact.
      const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), mid);
      const std::size_t seg =
          static_cast<std::size_t>(it - traj.times.begin()) - 1;
      sched.rates[k][i] = traj.rates[seg][i];
    }
  }

  UnservedResult res;
  res.schedule = std::move(sched);
  res.unserved = unserved_energy(res.schedule, demand);
  res.served = 0.0;
  for (std::size_t i = 0; i < n; ++i) res.served += res.schedule.energy_of(i);
  res.failure_time = traj.end_time();
  for (std::size_t i = 0; i < n; ++i)
    if (overdrawn[i]) res.failure_time = std::min(res.failure_time, clip_time[i]);
  res.lambda_bar = fp.lambda_bar;
  res.fixed_point_residual = fp.residual;
  return res;
}

double time_to_failure(const Trajectory& traj) {
  const std::size_t n = traj.device_count();
  for (std::size_t i = 0; i < n; ++i)
    if (traj.states.front()[i] < -1e-12) return traj.times.front();
  double first = traj.end_time();
  for (std::size_t k = 0; k < traj.segment_count(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (traj.states[k + 1][i] >= -1e-12) continue;
      const double start = traj.states[k][i];
      const double span = traj.times[k + 1] - traj.times[k];
      const double slope = (start - traj.states[k + 1][i]) / span;
      const double cross =
          start > 0.0 && slope > 0.0 ? traj.times[k] + start / slope
                                     : traj.times[k];
      first = std::min(first, cross);
    }
    if (first < traj.times[k + 1]) break;
  }
  return first;
}

Fleet truncate_fleet(const Fleet& fleet, double tau) {
  std::vector<Device> devs = fleet.devices;
  for (auto& dev : devs) dev.availability = dev.availability.restricted(tau);
  return Fleet(std::move(devs), tau);
}

TtfResult max_time_to_failure(const Fleet& fleet, const DemandProfile& demand,
                              const TtfOptions& opts) {
  if (!(opts.tau_tol > 0.0))
    throw std::invalid_argument("max_time_to_failure: tau_tol must be positive");
  TtfResult res;
  double tau = fleet.horizon;
  res.iterates.push_back(tau);

  FixedPointResult fp;
  bool certified = false;
  for (int k = 0; k < opts.max_outer; ++k) {
    const Fleet window_fleet = truncate_fleet(fleet, tau);
    const DemandProfile window_demand = demand.restricted(tau);
    fp = solve_fixed_point(window_fleet, window_demand, opts.fixed_point);
    if (!fp.converged)
      throw FixedPointFailure("max_time_to_failure: fixed point did not converge",
                              fp.residual, fp.iterations);
    const double failure = std::min(
        {time_to_failure(fp.trajectory), shortfall_onset(fp.trajectory), tau});
    if (failure > res.iterates.back() + 1e-9)
      throw std::logic_error("max_time_to_failure: iterates increased");
    res.iterates.push_back(failure);

    if (failure >= tau - 1e-12) {
      // Window exactly feasible: this run certifies the schedule.
      certified = true;
      break;
    }
    if (tau - failure <= opts.tau_tol) res.converged = true;
    tau = failure;
    if (tau <= 0.0) break;  // demand infeasible from t = 0
  }
  res.converged = res.converged || certified;
  res.tau_star = std::max(tau, 0.0);
  if (res.tau_star <= 0.0) return res;

  const Fleet window_fleet = truncate_fleet(fleet, res.tau_star);
  const DemandProfile window_demand = demand.restricted(res.tau_star);
  if (certified) {
    const FeasibilityVerdict v =
        verdict_from_fixed_point(window_fleet, window_demand, fp);
    if (!v.feasible)
      throw std::logic_error("max_time_to_failure: certification failed");
    res.schedule = *v.schedule;
  } else {
    // Outer budget exhausted mid-shrink: return the last run's restricted
    // rates truncated at the final iterate, without a feasibility claim.
    DispatchSchedule sched;
    const Trajectory& traj = fp.trajectory;
    sched.breakpoints.push_back(traj.times.front());
    for (std::size_t s = 0; s < traj.segment_count(); ++s) {
      const double b = std::min(traj.times[s + 1], res.tau_star);
      if (b <= sched.breakpoints.back()) break;
      const double mid = sched.breakpoints.back() +
                         0.5 * (b - sched.breakpoints.back());
      std::vector<double> row(fleet.size(), 0.0);
      for (std::size_t i = 0; i < fleet.size(); ++i)
        if (fleet.devices[i].availability.contains(mid))
          row[i] = traj.rates[s][i];
      sched.rates.push_back(std::move(row));
      sched.breakpoints.push_back(b);
    }
    res.schedule = std::move(sched);
  }
  return res;
}

std::string UnservedResult::to_json() const {
  nlohmann::json j;
  j["unserved_kwh"] = unserved;
  j["served_kwh"] = served;
  j["failure_time_h"] = failure_time;
  j["lambda_bar"] = lambda_bar;
  j["fixed_point_residual"] = fixed_point_residual;
  return j.dump();
}

std::string TtfResult::to_json() const {
  nlohmann::json j;
  j["tau_star_h"] = tau_star;
  j["iterates_h"] = iterates;
  j["converged"] = converged;
  return j.dump();
}

}  // namespace fleetdispatch
