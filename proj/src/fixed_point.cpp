#include "fleetdispatch/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fleetdispatch {

namespace {

bool segment_outside_availability(const Device& dev, double a, double b) {
  return !dev.availability.contains(a + 0.5 * (b - a));
}

}  // namespace

std::vector<double> outside_energy(const Trajectory& traj, const Fleet& fleet) {
  if (traj.device_count() != fleet.size())
    throw std::invalid_argument("outside_energy: trajectory/fleet mismatch");
  std::vector<double> delta(fleet.size(), 0.0);
  for (std::size_t k = 0; k < traj.segment_count(); ++k) {
    const double a = traj.times[k];
    const double b = traj.times[k + 1];
    for (std::size_t i = 0; i < fleet.size(); ++i)
      if (segment_outside_availability(fleet.devices[i], a, b))
        delta[i] += traj.rates[k][i] * (b - a);
  }
  return delta;
}

StateVector augmented_initial_state(const LambdaVector& lambda,
                                    const Fleet& fleet) {
  if (lambda.size() != fleet.size())
    throw std::invalid_argument("augmented_initial_state: dimension mismatch");
  StateVector x = fleet.initial_state();
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const double mu =
        fleet.horizon - fleet.devices[i].availability.measure();
    x[i] += lambda[i] * mu;
  }
  return x;
}

LambdaVector lambda_map(const LambdaVector& lambda, const Fleet& fleet,
                        const DemandProfile& demand, Trajectory* traj_out) {
  for (double l : lambda)
    if (l < -1e-12 || l > 1.0 + 1e-12)
      throw std::invalid_argument("lambda_map: lambda outside [0, 1]");
  SimulateOptions opts;
  opts.availability_aware = true;
  opts.allow_negative = true;
  Trajectory traj =
      simulate(fleet, augmented_initial_state(lambda, fleet), demand, opts);
  const auto delta = outside_energy(traj, fleet);
  LambdaVector out(fleet.size(), 0.0);
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const double mu = fleet.horizon - fleet.devices[i].availability.measure();
    if (mu > 0.0)
      out[i] = std::clamp(
          delta[i] / (fleet.devices[i].rated_power * mu), 0.0, 1.0);
  }
  if (traj_out) *traj_out = std::move(traj);
  return out;
}

DemandProfile augmented_demand_profile(const Trajectory& traj,
                                       const Fleet& fleet,
                                       const DemandProfile& demand) {
  std::vector<double> bps = traj.times;
  std::vector<double> vals(traj.segment_count(), 0.0);
  for (std::size_t k = 0; k < traj.segment_count(); ++k) {
    const double a = traj.times[k];
    const double b = traj.times[k + 1];
    double extra = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i)
      if (segment_outside_availability(fleet.devices[i], a, b))
        extra += traj.rates[k][i];
    vals[k] = demand.value_at(a + 0.5 * (b - a)) + extra;
  }
  return DemandProfile(std::move(bps), std::move(vals));
}

FixedPointResult solve_fixed_point(const Fleet& fleet,
                                   const DemandProfile& demand,
                                   const FixedPointOptions& opts) {
  if (!(opts.tol > 0.0))
    throw std::invalid_argument("solve_fixed_point: tol must be positive");
  LambdaVector lambda = opts.warm_start
                            ? *opts.warm_start
                            : LambdaVector(fleet.size(), 0.0);
  if (lambda.size() != fleet.size())
    throw std::invalid_argument("solve_fixed_point: warm start dimension");
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const double mu = fleet.horizon - fleet.devices[i].availability.measure();
    if (mu <= 0.0) lambda[i] = 0.0;
  }

  double alpha = opts.damping;
  std::deque<double> recent;
  FixedPointResult best;
  best.residual = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    Trajectory traj;
    const LambdaVector mapped = lambda_map(lambda, fleet, demand, &traj);
    const double residual = inf_dist(mapped, lambda);

    if (residual < best.residual) {
      best.lambda_bar = lambda;
      best.residual = residual;
      best.iterations = iter;
      best.trajectory = std::move(traj);
    }
    if (residual <= opts.tol) {
      best.iterations = iter;
      best.converged = true;
      break;
    }

    recent.push_back(residual);
    if (recent.size() > 10) recent.pop_front();
    if (alpha > 0.5 && recent.size() == 10 &&
        !std::is_sorted(recent.rbegin(), recent.rend()))
      alpha = 0.5;

    for (std::size_t i = 0; i < lambda.size(); ++i)
      lambda[i] = (1.0 - alpha) * lambda[i] + alpha * mapped[i];
  }

  best.x_tilde0 = augmented_initial_state(best.lambda_bar, fleet);
  best.d_tilde = augmented_demand_profile(best.trajectory, fleet, demand);
  return best;
}

std::string FixedPointResult::to_json() const {
  std::ostringstream os;
  os.precision(17);
  auto arr = [&os](const std::vector<double>& v) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) os << ',';
      os << v[i];
    }
    os << ']';
  };
  os << "{\"lambda_bar\":";
  arr(lambda_bar);
  os << ",\"x_tilde0\":";
  arr(x_tilde0);
  os << ",\"residual\":" << residual << ",\"iterations\":" << iterations
     << ",\"converged\":" << (converged ? "true" : "false") << "}";
  return os.str();
}

}  // namespace fleetdispatch
