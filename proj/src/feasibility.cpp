#include "fleetdispatch/feasibility.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fleetdispatch/oracle.hpp"
#include "json.hpp"

namespace fleetdispatch {

namespace {

DispatchSchedule restrict_to_availability(const Trajectory& traj,
                                          const Fleet& fleet) {
  DispatchSchedule sched;
  sched.breakpoints = traj.times;
  sched.rates.assign(traj.segment_count(),
                     std::vector<double>(fleet.size(), 0.0));
  for (std::size_t k = 0; k < traj.segment_count(); ++k) {
    const double mid = traj.times[k] + 0.5 * (traj.times[k + 1] - traj.times[k]);
    for (std::size_t i = 0; i < fleet.size(); ++i)
      if (fleet.devices[i].availability.contains(mid))
        sched.rates[k][i] = traj.rates[k][i];
  }
  return sched;
}

}  // namespace

FeasibilityVerdict verdict_from_fixed_point(const Fleet& fleet,
                                            const DemandProfile& demand,
                                            const FixedPointResult& fp) {
  const Trajectory& traj = fp.trajectory;
  FeasibilityVerdict verdict;

  for (std::size_t k = 0; k < traj.segment_count(); ++k) {
    if (traj.shortfall[k] > 1e-12) {
      verdict.feasible = false;
      verdict.state_witness = StateWitness{
          StateWitness::Kind::power_shortfall, -1, traj.times[k]};
      return verdict;
    }
  }
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      if (traj.states[k][i] < -kStateTol) {
        // The crossing instant is an event, so the first negative state sits
        // at the event following the crossing; report the crossing itself.
        double t = traj.times[k];
        if (k > 0 && traj.states[k - 1][i] > 0.0) {
          const double slope =
              traj.rates[k - 1][i] / fleet.devices[i].rated_power;
          if (slope > 0.0)
            t = traj.times[k - 1] + traj.states[k - 1][i] / slope;
        }
        verdict.feasible = false;
        verdict.state_witness = StateWitness{
            StateWitness::Kind::negative_state, static_cast<int>(i), t};
        return verdict;
      }
    }
  }

  DispatchSchedule sched = restrict_to_availability(traj, fleet);
  const std::string err = check_schedule(sched, fleet, demand, true);
  if (!err.empty())
    throw std::logic_error("feasible dispatch failed verification: " + err);
  verdict.feasible = true;
  verdict.schedule = std::move(sched);
  return verdict;
}

FeasibilityVerdict feasibility_by_dispatch(const Fleet& fleet,
                                           const DemandProfile& demand,
                                           const FixedPointOptions& opts) {
  const FixedPointResult fp = solve_fixed_point(fleet, demand, opts);
  if (!fp.converged) {
    std::ostringstream msg;
    msg << "fixed-point iteration did not converge: residual " << fp.residual
        << " after " << fp.iterations << " iterations";
    throw FixedPointFailure(msg.str(), fp.residual, fp.iterations);
  }
  return verdict_from_fixed_point(fleet, demand, fp);
}

FeasibilityVerdict subset_feasibility_check(const Fleet& fleet,
                                            const DemandProfile& demand,
                                            double slot_width) {
  const DiscreteInstance inst = discretize(fleet, demand, slot_width);
  if (inst.slots > kMaxSubsetSlots)
    throw std::invalid_argument(
        "subset_feasibility_check: slot count exceeds the enumeration cap");
  const std::size_t n = fleet.size();
  const int t = inst.slots;

  // Gray-code walk over all subsets W: one slot flips per step, so the
  // demand sum and the per-device availability counts update in O(N).
  std::vector<int> count(n, 0);
  std::vector<char> in_subset(static_cast<std::size_t>(t), 0);
  double lhs = 0.0;
  const std::uint64_t total = 1ULL << t;
  for (std::uint64_t g = 1; g < total; ++g) {
    const int bit = std::countr_zero(g);
    const std::size_t sb = static_cast<std::size_t>(bit);
    const int sign = in_subset[sb] ? -1 : 1;
    in_subset[sb] = static_cast<char>(!in_subset[sb]);
    lhs += sign * inst.demand[sb];
    for (std::size_t j = 0; j < n; ++j)
      if (inst.available[j][sb]) count[j] += sign;

    double rhs = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      rhs += std::min(count[j] * slot_width * inst.rated_power[j],
                      inst.supply[j]);
    if (lhs > rhs + 1e-9) {
      FeasibilityVerdict verdict;
      verdict.feasible = false;
      SubsetWitness w;
      w.slot_width = slot_width;
      w.demand_kwh = lhs;
      w.capacity_kwh = rhs;
      for (int k = 0; k < t; ++k)
        if (in_subset[static_cast<std::size_t>(k)]) w.slots.push_back(k);
      verdict.subset_witness = std::move(w);
      return verdict;
    }
  }

  FeasibilityVerdict verdict;
  verdict.feasible = true;
  verdict.schedule = oracle_schedule(inst, 0);
  return verdict;
}

bool flexibility_dominates(const StateVector& x_a, const StateVector& x_b,
                           const Fleet& fleet, double tol) {
  if (x_a.size() != fleet.size() || x_b.size() != fleet.size())
    throw std::invalid_argument("flexibility_dominates: dimension mismatch");
  auto deliverable = [&fleet](const StateVector& x, double m) {
    double e = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
      e += std::min(m, std::max(0.0, x[j])) * fleet.devices[j].rated_power;
    return e;
  };
  std::vector<double> sweep;
  sweep.reserve(x_a.size() + x_b.size());
  for (double v : x_a) sweep.push_back(std::max(0.0, v));
  for (double v : x_b) sweep.push_back(std::max(0.0, v));
  for (double m : sweep)
    if (deliverable(x_b, m) < deliverable(x_a, m) - tol) return false;
  return true;
}

std::string FeasibilityVerdict::to_json() const {
  nlohmann::json j;
  j["feasible"] = feasible;
  if (subset_witness) {
    j["witness"] = {{"type", "subset"},
                    {"slots", subset_witness->slots},
                    {"slot_width", subset_witness->slot_width},
                    {"demand_kwh", subset_witness->demand_kwh},
                    {"capacity_kwh", subset_witness->capacity_kwh}};
  } else if (state_witness) {
    j["witness"] = {
        {"type", state_witness->kind == StateWitness::Kind::negative_state
                     ? "negative_state"
                     : "power_shortfall"},
        {"device", state_witness->device},
        {"time", state_witness->time}};
  } else {
    j["witness"] = nullptr;
  }
  j["schedule_ref"] = schedule ? nlohmann::json("inline") : nlohmann::json(nullptr);
  return j.dump();
}

}  // namespace fleetdispatch
