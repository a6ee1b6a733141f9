#include "fleetdispatch/ggddf.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace fleetdispatch {

namespace {

constexpr double kMergeEps = 1e-12;
constexpr double kTimeEps = 1e-12;

// Simulator-internal grouping: one entry per equal-value block of devices.
// Members of a block share a single stored value, so devices that merge stay
// exactly equal for the rest of the run.
struct Blocks {
  std::vector<double> value;              // block time-to-discharge, desc
  std::vector<std::vector<int>> members;  // device indices per block
  std::vector<double> rate;               // depletion slope r in [0, 1]

  std::size_t count() const { return value.size(); }
};

// Serve demand group by group in decreasing-value order. Each group's
// fraction r applies to every member, available or not; only available
// capacity consumes demand. A group with zero available capacity discharges
// at full power while demand remains uncovered and idles once it is covered
// (the latter is what keeps §-style two-battery dispatches at their stated
// fixed points).
void scan_rates(const std::vector<double>& avail_cap, double demand,
                std::vector<double>& r_out) {
  double remaining = demand;
  for (std::size_t k = 0; k < avail_cap.size(); ++k) {
    double r = 0.0;
    if (remaining > 0.0) {
      if (avail_cap[k] <= 0.0) {
        r = 1.0;
      } else if (remaining >= avail_cap[k]) {
        r = 1.0;
        remaining -= avail_cap[k];
        if (remaining < 0.0) remaining = 0.0;
      } else {
        r = remaining / avail_cap[k];
        remaining = 0.0;
      }
    }
    r_out[k] = r;
  }
}

struct SegmentContext {
  double demand = 0.0;
  std::vector<char> available;  // per device
  double available_capacity = 0.0;
};

void block_available_capacity(const Blocks& blocks, const SegmentContext& ctx,
                              const Fleet& fleet,
                              std::vector<double>& cap_out) {
  cap_out.assign(blocks.count(), 0.0);
  for (std::size_t k = 0; k < blocks.count(); ++k)
    for (int i : blocks.members[k])
      if (ctx.available[static_cast<std::size_t>(i)])
        cap_out[k] += fleet.devices[static_cast<std::size_t>(i)].rated_power;
}

std::vector<double> static_event_times(const Fleet& fleet,
                                       const DemandProfile& demand) {
  std::vector<double> times = demand.breakpoints;
  times.push_back(0.0);
  times.push_back(fleet.horizon);
  for (const auto& dev : fleet.devices)
    for (double e : dev.availability.endpoints())
      if (e > 0.0 && e < fleet.horizon) times.push_back(e);
  std::sort(times.begin(), times.end());
  std::vector<double> out;
  for (double t : times)
    if (out.empty() || t - out.back() > kTimeEps) out.push_back(t);
  out.back() = fleet.horizon;
  return out;
}

void check_inputs(const Fleet& fleet, const StateVector& x0,
                  const DemandProfile& demand) {
  if (x0.size() != fleet.size())
    throw std::invalid_argument("simulate: state dimension mismatch");
  for (double v : x0)
    if (!std::isfinite(v))
      throw std::invalid_argument("simulate: state must be finite");
  if (std::abs(demand.horizon() - fleet.horizon) > 1e-9)
    throw std::invalid_argument("simulate: demand must span the fleet horizon");
}

}  // namespace

PolicyResult policy_rates(double t, const StateVector& x, double demand,
                          const Fleet& fleet, bool availability_aware,
                          double group_tol) {
  if (x.size() != fleet.size())
    throw std::invalid_argument("policy_rates: dimension mismatch");
  if (demand < 0.0)
    throw std::invalid_argument("policy_rates: demand must be nonnegative");
  const auto groups = group_partition(x, group_tol);
  std::vector<double> cap(groups.size(), 0.0);
  double total_available = 0.0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    for (int i : groups[k].members) {
      const auto& dev = fleet.devices[static_cast<std::size_t>(i)];
      if (!availability_aware || dev.availability.contains(t)) {
        cap[k] += dev.rated_power;
        total_available += dev.rated_power;
      }
    }
  }
  std::vector<double> r(groups.size(), 0.0);
  scan_rates(cap, demand, r);
  PolicyResult res;
  res.u.assign(x.size(), 0.0);
  for (std::size_t k = 0; k < groups.size(); ++k)
    for (int i : groups[k].members)
      res.u[static_cast<std::size_t>(i)] =
          r[k] * fleet.devices[static_cast<std::size_t>(i)].rated_power;
  res.shortfall = std::max(0.0, demand - total_available);
  return res;
}

double augmented_demand_pointwise(double t, const StateVector& x,
                                  double demand, const Fleet& fleet) {
  const auto pol = policy_rates(t, x, demand, fleet, true);
  double extra = 0.0;
  for (std::size_t i = 0; i < fleet.size(); ++i)
    if (!fleet.devices[i].availability.contains(t)) extra += pol.u[i];
  return demand + extra;
}

StateVector Trajectory::state_at(double t) const {
  if (times.empty()) throw std::logic_error("state_at: empty trajectory");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
  const double span = times[k + 1] - times[k];
  const double w = span > 0.0 ? (t - times[k]) / span : 0.0;
  StateVector out(states[k].size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = states[k][i] + w * (states[k + 1][i] - states[k][i]);
  return out;
}

void Trajectory::write_csv(std::ostream& os) const {
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
  for (std::size_t k = 0; k < times.size(); ++k) {
    put(times[k]);
    for (std::size_t i = 0; i < n; ++i) {
      os << ',';
      put(states[k][i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      os << ',';
      put(k < rates.size() ? rates[k][i] : 0.0);
    }
    os << ',';
    put(k < shortfall.size() ? shortfall[k] : 0.0);
    os << '\n';
  }
}

Trajectory simulate(const Fleet& fleet, const StateVector& x0,
                    const DemandProfile& demand, const SimulateOptions& opts) {
  check_inputs(fleet, x0, demand);
  const std::size_t n = fleet.size();
  const auto statics = static_event_times(fleet, demand);

  Blocks blocks;
  for (const auto& g : group_partition(x0, opts.group_tol)) {
    blocks.value.push_back(g.value);
    blocks.members.push_back(g.members);
  }
  blocks.rate.assign(blocks.count(), 0.0);

  auto expand_state = [&]() {
    StateVector x(n, 0.0);
    for (std::size_t k = 0; k < blocks.count(); ++k)
      for (int i : blocks.members[k])
        x[static_cast<std::size_t>(i)] = blocks.value[k];
    return x;
  };

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(expand_state());

  std::size_t endpoint_count = 0;
  for (const auto& dev : fleet.devices)
    endpoint_count += 2 * dev.availability.size();
  const std::size_t event_cap =
      static_cast<std::size_t>(opts.event_cap_factor) *
      (n + demand.breakpoints.size() + endpoint_count + 2);
  std::size_t events = 0;

  std::vector<double> cap, r;
  for (std::size_t s = 0; s + 1 < statics.size(); ++s) {
    const double seg_begin = statics[s];
    const double seg_end = statics[s + 1];
    SegmentContext ctx;
    const double mid = seg_begin + 0.5 * (seg_end - seg_begin);
    ctx.demand = demand.value_at(mid);
    ctx.available.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const bool avail =
          !opts.availability_aware || fleet.devices[i].availability.contains(mid);
      ctx.available[i] = avail ? 1 : 0;
      if (avail) ctx.available_capacity += fleet.devices[i].rated_power;
    }

    double cur = seg_begin;
    while (cur < seg_end - kTimeEps) {
      if (++events > event_cap)
        throw std::logic_error("simulate: event count exceeded safety bound");

      block_available_capacity(blocks, ctx, fleet, cap);
      r.assign(blocks.count(), 0.0);
      scan_rates(cap, ctx.demand, r);
      blocks.rate = r;

      if (!opts.allow_negative) {
        for (std::size_t k = 0; k < blocks.count(); ++k) {
          if (blocks.value[k] <= kMergeEps && r[k] > 0.0) {
            traj.stopped_early = true;
            return traj;
          }
        }
      }

      // Next event: closed-form merge and zero-crossing times against the
      // static segment end.
      double dt = seg_end - cur;
      for (std::size_t k = 0; k + 1 < blocks.count(); ++k) {
        if (r[k] > r[k + 1]) {
          const double gap = blocks.value[k] - blocks.value[k + 1];
          const double cand = gap / (r[k] - r[k + 1]);
          if (cand < dt) dt = cand;
        }
      }
      for (std::size_t k = 0; k < blocks.count(); ++k) {
        if (blocks.value[k] > kMergeEps && r[k] > 0.0) {
          const double cand = blocks.value[k] / r[k];
          if (cand < dt) dt = cand;
        }
      }
      if (dt < 0.0) dt = 0.0;
      const double next = std::min(seg_end, cur + dt);
      const double step = next - cur;

      RateVector u(n, 0.0);
      for (std::size_t k = 0; k < blocks.count(); ++k)
        for (int i : blocks.members[k])
          u[static_cast<std::size_t>(i)] =
              r[k] * fleet.devices[static_cast<std::size_t>(i)].rated_power;

      for (std::size_t k = 0; k < blocks.count(); ++k) {
        blocks.value[k] -= r[k] * step;
        if (std::abs(blocks.value[k]) <= kMergeEps) blocks.value[k] = 0.0;
      }
      // Merge adjacent blocks that met; merged devices share one value from
      // here on.
      for (std::size_t k = 0; k + 1 < blocks.count();) {
        if (blocks.value[k] - blocks.value[k + 1] <= kMergeEps) {
          blocks.members[k].insert(blocks.members[k].end(),
                                   blocks.members[k + 1].begin(),
                                   blocks.members[k + 1].end());
          blocks.value.erase(blocks.value.begin() +
                             static_cast<std::ptrdiff_t>(k + 1));
          blocks.members.erase(blocks.members.begin() +
                               static_cast<std::ptrdiff_t>(k + 1));
          blocks.rate.erase(blocks.rate.begin() +
                            static_cast<std::ptrdiff_t>(k + 1));
        } else {
          ++k;
        }
      }

      traj.times.push_back(next);
      traj.states.push_back(expand_state());
      traj.rates.push_back(std::move(u));
      traj.shortfall.push_back(
          std::max(0.0, ctx.demand - ctx.available_capacity));
      cur = next;
    }
  }
  return traj;
}

Trajectory simulate_fixed_step(const Fleet& fleet, const StateVector& x0,
                               const DemandProfile& demand,
                               bool availability_aware, bool allow_negative,
                               double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_fixed_step: dt <= 0");
  check_inputs(fleet, x0, demand);
  const std::size_t n = fleet.size();
  const auto statics = static_event_times(fleet, demand);

  Trajectory traj;
  StateVector x = x0;
  traj.times.push_back(0.0);
  traj.states.push_back(x);

  double t = 0.0;
  std::size_t next_static = 1;
  while (t < fleet.horizon - kTimeEps) {
    while (next_static < statics.size() && statics[next_static] <= t + kTimeEps)
      ++next_static;
    const double bound =
        next_static < statics.size() ? statics[next_static] : fleet.horizon;
    double h = std::min(dt, bound - t);
    const double mid = t + 0.5 * h;
    const auto pol =
        policy_rates(mid, x, demand.value_at(mid), fleet, availability_aware);

    bool stop_after = false;
    if (!allow_negative) {
      for (std::size_t i = 0; i < n; ++i) {
        const double slope = pol.u[i] / fleet.devices[i].rated_power;
        if (slope <= 0.0) continue;
        if (x[i] <= 0.0) {
          traj.stopped_early = true;
          return traj;
        }
        const double cross = x[i] / slope;
        if (cross < h) {
          h = cross;
          stop_after = true;
        }
      }
    }

    for (std::size_t i = 0; i < n; ++i)
      x[i] -= pol.u[i] / fleet.devices[i].rated_power * h;
    t += h;
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.rates.push_back(pol.u);
    traj.shortfall.push_back(pol.shortfall);
    if (stop_after) {
      traj.stopped_early = true;
      return traj;
    }
  }
  return traj;
}

}  // namespace fleetdispatch
