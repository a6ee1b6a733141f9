#include "fleetdispatch/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fleetdispatch/rng.hpp"
#include "json.hpp"

namespace fleetdispatch {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw std::runtime_error("scenario schema: " + path + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_error(path + "." + key, "missing");
  return *it;
}

double require_number(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) schema_error(path + "." + key, "expected a number");
  return v.get<double>();
}

}  // namespace

Fleet ScenarioSpec::to_fleet() const {
  std::vector<Device> devs;
  devs.reserve(devices.size());
  for (const auto& ds : devices) {
    Device dev;
    dev.id = ds.id;
    dev.rated_power = ds.rated_power_kw;
    dev.efficiency = ds.efficiency;
    dev.initial_energy = external_energy(ds.initial_energy_kwh, ds.efficiency);
    std::vector<Interval> ivs;
    for (const auto& [s, e] : ds.availability) ivs.push_back(Interval{s, e});
    dev.availability = AvailabilitySet(std::move(ivs));
    devs.push_back(std::move(dev));
  }
  return Fleet(std::move(devs), horizon_hours);
}

DemandProfile ScenarioSpec::to_demand() const {
  return DemandProfile(demand_breakpoints, demand_values_kw);
}

std::string ScenarioSpec::to_json(int indent) const {
  json j;
  j["horizon_hours"] = horizon_hours;
  auto& devs = j["devices"] = json::array();
  for (const auto& ds : devices) {
    json d;
    d["id"] = ds.id;
    d["rated_power_kw"] = ds.rated_power_kw;
    d["initial_energy_kwh"] = ds.initial_energy_kwh;
    d["efficiency"] = ds.efficiency;
    auto& av = d["availability"] = json::array();
    for (const auto& [s, e] : ds.availability) av.push_back(json::array({s, e}));
    devs.push_back(std::move(d));
  }
  j["demand"] = {{"breakpoints", demand_breakpoints},
                 {"values_kw", demand_values_kw}};
  json meta = json::object();
  if (seed) meta["seed"] = *seed;
  if (!note.empty()) meta["note"] = note;
  j["meta"] = std::move(meta);
  return j.dump(indent);
}

ScenarioSpec ScenarioSpec::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("scenario schema: invalid JSON: ") +
                             e.what());
  }
  ScenarioSpec spec;
  spec.horizon_hours = require_number(j, "horizon_hours", "$");
  const json& devices = require(j, "devices", "$");
  if (!devices.is_array()) schema_error("$.devices", "expected an array");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const std::string path = "$.devices[" + std::to_string(i) + "]";
    const json& d = devices[i];
    DeviceSpec ds;
    const json& id = require(d, "id", path);
    if (!id.is_string()) schema_error(path + ".id", "expected a string");
    ds.id = id.get<std::string>();
    ds.rated_power_kw = require_number(d, "rated_power_kw", path);
    ds.initial_energy_kwh = require_number(d, "initial_energy_kwh", path);
    ds.efficiency =
        d.contains("efficiency") ? require_number(d, "efficiency", path) : 1.0;
    const json& av = require(d, "availability", path);
    if (!av.is_array()) schema_error(path + ".availability", "expected an array");
    for (std::size_t k = 0; k < av.size(); ++k) {
      const std::string ap = path + ".availability[" + std::to_string(k) + "]";
      if (!av[k].is_array() || av[k].size() != 2 || !av[k][0].is_number() ||
          !av[k][1].is_number())
        schema_error(ap, "expected [start, end]");
      ds.availability.emplace_back(av[k][0].get<double>(),
                                   av[k][1].get<double>());
    }
    spec.devices.push_back(std::move(ds));
  }
  const json& demand = require(j, "demand", "$");
  const json& bps = require(demand, "breakpoints", "$.demand");
  const json& vals = require(demand, "values_kw", "$.demand");
  if (!bps.is_array()) schema_error("$.demand.breakpoints", "expected an array");
  if (!vals.is_array()) schema_error("$.demand.values_kw", "expected an array");
  for (const auto& v : bps) {
    if (!v.is_number()) schema_error("$.demand.breakpoints", "expected numbers");
    spec.demand_breakpoints.push_back(v.get<double>());
  }
  for (const auto& v : vals) {
    if (!v.is_number()) schema_error("$.demand.values_kw", "expected numbers");
    spec.demand_values_kw.push_back(v.get<double>());
  }
  if (j.contains("meta") && j["meta"].is_object()) {
    const json& meta = j["meta"];
    if (meta.contains("seed")) {
      if (!meta["seed"].is_number_unsigned())
        schema_error("$.meta.seed", "expected an unsigned integer");
      spec.seed = meta["seed"].get<std::uint64_t>();
    }
    if (meta.contains("note")) {
      if (!meta["note"].is_string())
        schema_error("$.meta.note", "expected a string");
      spec.note = meta["note"].get<std::string>();
    }
  }
  return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ScenarioSpec::from_json(buf.str());
}

void save_scenario(const ScenarioSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path);
  out << spec.to_json() << '\n';
}

Fleet generate_fleet(int n, const FleetGenParams& params, std::uint64_t seed,
                     double horizon) {
  if (n < 1) throw std::invalid_argument("generate_fleet: n must be >= 1");
  if (params.energy_std < 0.0 || params.window_start_std < 0.0 ||
      params.window_len_std < 0.0)
    throw std::invalid_argument("generate_fleet: std deviations must be >= 0");
  if (!(params.rated_power > 0.0))
    throw std::invalid_argument("generate_fleet: rated power must be positive");
  if (params.energy_mean < 0.0)
    throw std::invalid_argument("generate_fleet: degenerate energy mean");

  std::vector<Device> devs;
  devs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SplitMix64 rng = SplitMix64::stream(seed, static_cast<std::uint64_t>(i));
    Device dev;
    dev.id = "d" + std::to_string(i);
    dev.rated_power = params.rated_power;
    dev.efficiency = 1.0;
    // Draw order per device: energy, window start, window length.
    dev.initial_energy = std::max(
        0.0, params.energy_mean + params.energy_std * rng.next_gaussian());
    const double start = std::nearbyint(params.window_start_mean +
                                        params.window_start_std *
                                            rng.next_gaussian());
    const double len = std::nearbyint(params.window_len_mean +
                                      params.window_len_std *
                                          rng.next_gaussian());
    const double lo = std::clamp(start, 0.0, horizon);
    const double hi = std::clamp(start + len, 0.0, horizon);
    if (hi > lo)
      dev.availability = AvailabilitySet({Interval{lo, hi}});
    devs.push_back(std::move(dev));
  }
  return Fleet(std::move(devs), horizon);
}

ScenarioSpec generate_benchmark_scenario(int n, std::uint64_t seed,
                                         const FleetGenParams& params,
                                         double horizon) {
  const Fleet fleet = generate_fleet(n, params, seed, horizon);
  ScenarioSpec spec;
  spec.horizon_hours = horizon;
  spec.seed = seed;
  spec.note = "generated benchmark scenario";
  for (const auto& dev : fleet.devices) {
    DeviceSpec ds;
    ds.id = dev.id;
    ds.rated_power_kw = dev.rated_power;
    ds.initial_energy_kwh = dev.initial_energy;  // efficiency 1
    ds.efficiency = 1.0;
    for (const auto& iv : dev.availability.intervals())
      ds.availability.emplace_back(iv.start, iv.end);
    spec.devices.push_back(std::move(ds));
  }
  const int hours = static_cast<int>(std::ceil(horizon));
  for (int h = 0; h <= hours; ++h)
    spec.demand_breakpoints.push_back(std::min(static_cast<double>(h), horizon));
  for (int h = 0; h < hours; ++h) {
    double cap = 0.0;
    for (const auto& dev : fleet.devices)
      if (dev.availability.contains(h + 0.5)) cap += dev.rated_power;
    spec.demand_values_kw.push_back(0.5 * cap);
  }
  return spec;
}

CounterexampleFixture counterexample_fixture() {
  CounterexampleFixture fx;
  Device one{"b1", 1.0, 3.0, 1.0, AvailabilitySet({Interval{0.0, 5.0}})};
  Device two{"b2", 1.0, 6.0, 1.0, AvailabilitySet({Interval{0.0, 12.0}})};
  fx.fleet = Fleet({one, two}, 12.0);
  fx.d1 = DemandProfile({0.0, 3.0, 5.0, 11.0, 12.0}, {1.0, 0.0, 1.0, 0.0});
  fx.d2 = DemandProfile({0.0, 2.0, 5.0, 6.0, 12.0}, {1.0, 2.0, 1.0, 0.0});
  return fx;
}

AlignedCase generate_aligned_case(std::uint64_t seed, int max_devices,
                                  int max_slots, AlignedDemandMode mode) {
  if (max_devices < 1 || max_slots < 1)
    throw std::invalid_argument("generate_aligned_case: bounds must be >= 1");
  SplitMix64 rng = SplitMix64::stream(seed, 0x414C4E44ULL);
  const int n = 1 + static_cast<int>(rng.next_below(
                        static_cast<std::uint64_t>(max_devices)));
  const int slots = 1 + static_cast<int>(rng.next_below(
                            static_cast<std::uint64_t>(max_slots)));
  const double width = rng.next_below(2) ? 1.0 : 0.5;
  const double horizon = slots * width;

  std::vector<Device> devs;
  std::vector<std::vector<char>> avail(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    Device dev;
    dev.id = "g" + std::to_string(j);
    dev.rated_power = 0.25 * static_cast<double>(1 + rng.next_below(8));
    dev.initial_energy = 0.25 * static_cast<double>(rng.next_below(25));
    dev.efficiency = 1.0;
    auto& mask = avail[static_cast<std::size_t>(j)];
    mask.assign(static_cast<std::size_t>(slots), 0);
    for (int k = 0; k < slots; ++k)
      mask[static_cast<std::size_t>(k)] = rng.next_below(4) != 0 ? 1 : 0;
    std::vector<Interval> ivs;
    for (int k = 0; k < slots; ++k) {
      if (!mask[static_cast<std::size_t>(k)]) continue;
      const double a = k * width;
      if (!ivs.empty() && ivs.back().end == a)
        ivs.back().end = a + width;
      else
        ivs.push_back(Interval{a, a + width});
    }
    dev.availability = AvailabilitySet(std::move(ivs));
    devs.push_back(std::move(dev));
  }
  Fleet fleet(std::move(devs), horizon);

  std::vector<double> demand_kwh(static_cast<std::size_t>(slots), 0.0);
  if (mode == AlignedDemandMode::feasible) {
    std::vector<double> supply_left(fleet.size());
    for (std::size_t j = 0; j < fleet.size(); ++j)
      supply_left[j] = fleet.devices[j].initial_energy;
    for (int k = 0; k < slots; ++k)
      for (std::size_t j = 0; j < fleet.size(); ++j) {
        if (!avail[j][static_cast<std::size_t>(k)]) continue;
        const double cap = fleet.devices[j].rated_power * width;
        const double frac = 0.25 * static_cast<double>(rng.next_below(5));
        const double amt = std::min(frac * cap, supply_left[j]);
        demand_kwh[static_cast<std::size_t>(k)] += amt;
        supply_left[j] -= amt;
      }
  } else {
    const double inflate = mode == AlignedDemandMode::oversubscribed ? 3.0 : 1.0;
    double cap_per_slot = 0.0;
    for (const auto& dev : fleet.devices)
      cap_per_slot += dev.rated_power * width;
    for (int k = 0; k < slots; ++k) {
      const double frac = 0.25 * static_cast<double>(rng.next_below(5));
      demand_kwh[static_cast<std::size_t>(k)] =
          0.25 * std::nearbyint(4.0 * inflate * frac * cap_per_slot * 0.5);
    }
  }

  std::vector<double> bps, vals;
  bps.push_back(0.0);
  for (int k = 0; k < slots; ++k) {
    bps.push_back((k + 1) * width);
    vals.push_back(demand_kwh[static_cast<std::size_t>(k)] / width);
  }
  return AlignedCase{std::move(fleet), DemandProfile(std::move(bps), std::move(vals)),
                     width};
}

ScenarioSpec counterexample_scenario(bool second_profile) {
  const CounterexampleFixture fx = counterexample_fixture();
  ScenarioSpec spec;
  spec.horizon_hours = fx.fleet.horizon;
  for (const auto& dev : fx.fleet.devices) {
    DeviceSpec ds;
    ds.id = dev.id;
    ds.rated_power_kw = dev.rated_power;
    ds.initial_energy_kwh = dev.initial_energy;
    ds.efficiency = 1.0;
    for (const auto& iv : dev.availability.intervals())
      ds.availability.emplace_back(iv.start, iv.end);
    spec.devices.push_back(std::move(ds));
  }
  const DemandProfile& d = second_profile ? fx.d2 : fx.d1;
  spec.demand_breakpoints = d.breakpoints;
  spec.demand_values_kw = d.values;
  spec.note = second_profile ? "two-battery fixture, second profile"
                             : "two-battery fixture, first profile";
  return spec;
}

}  // namespace fleetdispatch
