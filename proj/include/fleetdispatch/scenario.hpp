#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fleetdispatch/model.hpp"

// Scenario schema, deterministic fleet generation and the built-in
// two-battery fixtures.

namespace fleetdispatch {

using LambdaVector = std::vector<double>;

struct DeviceSpec {
  std::string id;
  double rated_power_kw = 0.0;
  double initial_energy_kwh = 0.0;  // internally measured
  double efficiency = 1.0;
  std::vector<std::pair<double, double>> availability;
};

/// Serializable scenario. Stored energies are internal; ingestion into a
/// Fleet applies the round-trip efficiency once, and all algorithms then
/// operate on external energy.
struct ScenarioSpec {
  double horizon_hours = 0.0;
  std::vector<DeviceSpec> devices;
  std::vector<double> demand_breakpoints;
  std::vector<double> demand_values_kw;
  std::optional<std::uint64_t> seed;
  std::string note;

  Fleet to_fleet() const;
  DemandProfile to_demand() const;

  std::string to_json(int indent = 2) const;
  /// Parses and validates; schema violations name the offending field path.
  static ScenarioSpec from_json(const std::string& text);
};

ScenarioSpec load_scenario(const std::string& path);
void save_scenario(const ScenarioSpec& spec, const std::string& path);

struct FleetGenParams {
  double energy_mean = 8.0;        // kWh
  double energy_std = 1.5;
  double window_start_mean = 6.0;  // hours after the horizon start
  double window_start_std = 1.0;
  double window_len_mean = 10.0;
  double window_len_std = 2.0;
  double rated_power = 1.0;        // kW, shared by the whole fleet
};

/// Deterministic random fleet on [0, horizon]: energies normal truncated at
/// zero, one contiguous availability window per device with integer-hour
/// boundaries clipped to the horizon. Each device draws from its own
/// SplitMix64 stream, so the output is bit-identical across platforms.
Fleet generate_fleet(int n, const FleetGenParams& params, std::uint64_t seed,
                     double horizon = 24.0);

/// Fleet plus a synthesized hourly demand at half the fleet's aggregate
/// availability; used by the benchmark command.
ScenarioSpec generate_benchmark_scenario(int n, std::uint64_t seed,
                                         const FleetGenParams& params = {},
                                         double horizon = 24.0);

/// The two-battery fixture: rated powers 1 kW, x(0) = [3, 6] h,
/// availability [0,5] and [0,12] on a 12 h horizon, with the two demand
/// profiles that coincide on [0,2] yet force different dispatches.
struct CounterexampleFixture {
  Fleet fleet;
  DemandProfile d1;  // 1 kW on [0,3] and [5,11]
  DemandProfile d2;  // 1 kW on [0,2], 2 on [2,5], 1 on [5,6]
  LambdaVector expected_lambda_d1{6.0 / 7.0, 0.0};
  LambdaVector expected_lambda_d2{0.0, 0.0};
  StateVector expected_x_tilde_d1{9.0, 6.0};
};

CounterexampleFixture counterexample_fixture();

/// Scenario form of the fixture (efficiency 1), for golden files and the CLI.
ScenarioSpec counterexample_scenario(bool second_profile);

/// A slot-aligned random case for differential testing. All quantities are
/// dyadic rationals, so slot discretization and the integer-scaled flow
/// oracle are exact.
struct AlignedCase {
  Fleet fleet;
  DemandProfile demand;
  double slot_width = 0.0;
};

enum class AlignedDemandMode {
  random,        // independent per-slot draws; mixed verdicts
  feasible,      // demand assembled from a routable flow; always feasible
  oversubscribed // random demand inflated; mostly infeasible
};

AlignedCase generate_aligned_case(std::uint64_t seed, int max_devices,
                                  int max_slots, AlignedDemandMode mode);

}  // namespace fleetdispatch
