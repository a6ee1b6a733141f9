#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fleetdispatch/feasibility.hpp"
#include "fleetdispatch/fixed_point.hpp"
#include "fleetdispatch/optimal.hpp"
#include "fleetdispatch/oracle.hpp"
#include "fleetdispatch/scenario.hpp"

namespace fd = fleetdispatch;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

int thread_budget() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FLEETDISPATCH_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return static_cast<int>(n);
}

json witness_json(const fd::FeasibilityVerdict& v) {
  if (v.subset_witness) {
    return json{{"type", "subset"},
                {"slots", v.subset_witness->slots},
                {"slot_width", v.subset_witness->slot_width},
                {"demand_kwh", v.subset_witness->demand_kwh},
                {"capacity_kwh", v.subset_witness->capacity_kwh}};
  }
  if (v.state_witness) {
    return json{{"type", v.state_witness->kind ==
                             fd::StateWitness::Kind::negative_state
                         ? "negative_state"
                         : "power_shortfall"},
                {"device", v.state_witness->device},
                {"time", v.state_witness->time}};
  }
  return nullptr;
}

struct LoadedScenario {
  fd::Fleet fleet;
  fd::DemandProfile demand;
};

LoadedScenario load(const std::string& path) {
  const fd::ScenarioSpec spec = fd::load_scenario(path);
  return LoadedScenario{spec.to_fleet(), spec.to_demand()};
}

void write_schedule_csv(const fd::DispatchSchedule& sched,
                        const fd::Fleet& fleet, const fd::DemandProfile& demand,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  sched.write_csv(out, fleet, &demand);
}

int cmd_feasible(const std::string& scenario, const std::string& method,
                 double slot_width, const std::string& out_csv) {
  const auto sc = load(scenario);
  json result;
  result["method"] = method;

  std::optional<fd::FeasibilityVerdict> by_dispatch, by_subset;
  if (method == "dispatch" || method == "both") {
    try {
      by_dispatch = fd::feasibility_by_dispatch(sc.fleet, sc.demand);
    } catch (const fd::FixedPointFailure& e) {
      if (slot_width > 0.0) {
        std::cerr << "fixed point failed (" << e.what()
                  << "); falling back to the subset test\n";
        by_subset = fd::subset_feasibility_check(sc.fleet, sc.demand, slot_width);
      } else {
        throw;
      }
    }
  }
  if (method == "subset" || (method == "both" && !by_subset)) {
    if (!(slot_width > 0.0))
      throw std::runtime_error("--slot-width is required for the subset test");
    by_subset = fd::subset_feasibility_check(sc.fleet, sc.demand, slot_width);
  }

  if (method == "both" && by_dispatch && by_subset &&
      by_dispatch->feasible != by_subset->feasible) {
    result["agreement"] = false;
    result["dispatch_feasible"] = by_dispatch->feasible;
    result["subset_feasible"] = by_subset->feasible;
    std::cout << result.dump() << '\n';
    std::cerr << "FATAL: dispatch and subset verdicts disagree\n";
    return kExitError;
  }

  const fd::FeasibilityVerdict& v = by_dispatch ? *by_dispatch : *by_subset;
  result["feasible"] = v.feasible;
  result["witness"] = witness_json(v);
  if (method == "both") result["agreement"] = true;
  if (v.feasible && v.schedule && !out_csv.empty()) {
    write_schedule_csv(*v.schedule, sc.fleet, sc.demand, out_csv);
    result["schedule_ref"] = out_csv;
  } else {
    result["schedule_ref"] = nullptr;
  }
  std::cout << result.dump() << '\n';
  std::cerr << (v.feasible ? "feasible" : "infeasible") << '\n';
  return v.feasible ? kExitOk : kExitInfeasible;
}

int cmd_dispatch(const std::string& scenario, const std::string& out_csv) {
  const auto sc = load(scenario);
  const fd::FeasibilityVerdict v =
      fd::feasibility_by_dispatch(sc.fleet, sc.demand);
  json result;
  result["feasible"] = v.feasible;
  result["witness"] = witness_json(v);
  if (!v.feasible) {
    result["schedule_ref"] = nullptr;
    std::cout << result.dump() << '\n';
    std::cerr << "infeasible; no schedule written\n";
    return kExitInfeasible;
  }
  write_schedule_csv(*v.schedule, sc.fleet, sc.demand, out_csv);
  result["schedule_ref"] = out_csv;
  std::cout << result.dump() << '\n';
  std::cerr << "schedule written to " << out_csv << '\n';
  return kExitOk;
}

int cmd_min_unserved(const std::string& scenario, const std::string& out_csv,
                     bool oracle_check, double slot_width) {
  const auto sc = load(scenario);
  const fd::UnservedResult res = fd::min_unserved_energy(sc.fleet, sc.demand);
  json result = json::parse(res.to_json());
  if (!out_csv.empty()) {
    write_schedule_csv(res.schedule, sc.fleet, sc.demand, out_csv);
    result["schedule_ref"] = out_csv;
  }
  if (oracle_check) {
    if (!(slot_width > 0.0))
      throw std::runtime_error("--slot-width is required for --oracle-check");
    const double oracle =
        fd::oracle_min_unserved(fd::discretize(sc.fleet, sc.demand, slot_width));
    result["oracle_unserved_kwh"] = oracle;
    if (std::abs(oracle - res.unserved) > 1e-6) {
      std::cout << result.dump() << '\n';
      std::cerr << "FATAL: unserved energy disagrees with the oracle\n";
      return kExitError;
    }
  }
  std::cout << result.dump() << '\n';
  std::cerr << "unserved " << res.unserved << " kWh, served " << res.served
            << " kWh\n";
  return kExitOk;
}

int cmd_max_ttf(const std::string& scenario, double tau_tol, int max_outer,
                const std::string& out_csv, bool oracle_check,
                double slot_width) {
  const auto sc = load(scenario);
  fd::TtfOptions opts;
  opts.tau_tol = tau_tol;
  opts.max_outer = max_outer;
  const fd::TtfResult res = fd::max_time_to_failure(sc.fleet, sc.demand, opts);
  json result = json::parse(res.to_json());
  if (!out_csv.empty() && res.tau_star > 0.0) {
    std::ofstream out(out_csv);
    if (!out) throw std::runtime_error("cannot write " + out_csv);
    const fd::Fleet wf = fd::truncate_fleet(sc.fleet, res.tau_star);
    const fd::DemandProfile wd = sc.demand.restricted(res.tau_star);
    res.schedule.write_csv(out, wf, &wd);
    result["schedule_ref"] = out_csv;
  }
  if (oracle_check) {
    if (!(slot_width > 0.0))
      throw std::runtime_error("--slot-width is required for --oracle-check");
    const int slots =
        fd::oracle_max_ttf(fd::discretize(sc.fleet, sc.demand, slot_width));
    result["oracle_ttf_h"] = slots * slot_width;
    if (std::abs(res.tau_star - slots * slot_width) > slot_width + 1e-9) {
      std::cout << result.dump() << '\n';
      std::cerr << "FATAL: time-to-failure disagrees with the oracle\n";
      return kExitError;
    }
  }
  std::cout << result.dump() << '\n';
  std::cerr << "tau* = " << res.tau_star << " h after " << res.iterates.size()
            << " iterates\n";
  return kExitOk;
}

int cmd_bench(const std::string& sizes_arg, std::uint64_t seed,
              const std::string& out_csv) {
  std::vector<int> sizes;
  std::stringstream ss(sizes_arg);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) sizes.push_back(std::stoi(tok));
  if (sizes.empty()) throw std::runtime_error("no sizes given");

  json rows = json::array();
  std::ostringstream csv;
  csv << "N,seconds,iterations\n";
  bool all_converged = true;
  for (int n : sizes) {
    const fd::ScenarioSpec spec = fd::generate_benchmark_scenario(n, seed);
    const fd::Fleet fleet = spec.to_fleet();
    const fd::DemandProfile demand = spec.to_demand();
    std::vector<double> secs;
    fd::FixedPointResult fp;
    for (int run = 0; run < 3; ++run) {
      const auto t0 = std::chrono::steady_clock::now();
      fp = fd::solve_fixed_point(fleet, demand);
      const auto t1 = std::chrono::steady_clock::now();
      secs.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(secs.begin(), secs.end());
    const double median = secs[1];
    all_converged = all_converged && fp.converged;
    rows.push_back(json{{"n", n},
                        {"seconds", median},
                        {"iterations", fp.iterations},
                        {"residual", fp.residual},
                        {"converged", fp.converged}});
    csv << n << ',' << median << ',' << fp.iterations << '\n';
    std::cerr << "N=" << n << "  " << median << " s  " << fp.iterations
              << " iterations  residual " << fp.residual << '\n';
  }
  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) throw std::runtime_error("cannot write " + out_csv);
    out << csv.str();
  }
  std::cout << json{{"seed", seed}, {"rows", rows}}.dump() << '\n';
  return all_converged ? kExitOk : kExitError;
}

struct CheckFailure {
  std::uint64_t seed;
  std::string what;
};

// One differential comparison: dispatch vs subset vs max-flow verdicts, then
// unserved energy and time-to-failure against the oracle.
std::optional<CheckFailure> check_one(std::uint64_t seed, int max_n,
                                      int max_slots) {
  const auto mode = static_cast<fd::AlignedDemandMode>(seed % 3);
  const fd::AlignedCase c =
      fd::generate_aligned_case(seed, max_n, max_slots, mode);
  const fd::DiscreteInstance inst =
      fd::discretize(c.fleet, c.demand, c.slot_width);
  try {
    const bool oracle = fd::oracle_feasible(inst);
    const bool dispatch =
        fd::feasibility_by_dispatch(c.fleet, c.demand).feasible;
    const bool subset =
        fd::subset_feasibility_check(c.fleet, c.demand, c.slot_width).feasible;
    if (oracle != dispatch || oracle != subset) {
      std::ostringstream msg;
      msg << "feasibility mismatch: oracle=" << oracle
          << " dispatch=" << dispatch << " subset=" << subset;
      return CheckFailure{seed, msg.str()};
    }
    const double u = fd::min_unserved_energy(c.fleet, c.demand).unserved;
    const double u_oracle = fd::oracle_min_unserved(inst);
    if (std::abs(u - u_oracle) > 1e-6) {
      std::ostringstream msg;
      msg << "unserved mismatch: " << u << " vs oracle " << u_oracle;
      return CheckFailure{seed, msg.str()};
    }
    const double ttf = fd::max_time_to_failure(c.fleet, c.demand).tau_star;
    const double ttf_oracle = fd::oracle_max_ttf(inst) * c.slot_width;
    if (std::abs(ttf - ttf_oracle) > c.slot_width + 1e-9) {
      std::ostringstream msg;
      msg << "ttf mismatch: " << ttf << " vs oracle " << ttf_oracle;
      return CheckFailure{seed, msg.str()};
    }
  } catch (const std::exception& e) {
    return CheckFailure{seed, std::string("exception: ") + e.what()};
  }
  return std::nullopt;
}

int cmd_oracle_check(int count, int max_n, int max_slots, std::uint64_t seed) {
  std::vector<std::optional<CheckFailure>> results(
      static_cast<std::size_t>(count));
  const int workers = std::min(thread_budget(), std::max(1, count));
  std::atomic<int> cursor{0};
  auto work = [&]() {
    for (int i = cursor.fetch_add(1); i < count; i = cursor.fetch_add(1))
      results[static_cast<std::size_t>(i)] =
          check_one(seed + static_cast<std::uint64_t>(i), max_n, max_slots);
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  int failures = 0;
  json detail = json::array();
  for (const auto& r : results) {
    if (!r) continue;
    ++failures;
    if (detail.size() < 20)
      detail.push_back(json{{"seed", r->seed}, {"error", r->what}});
    std::cerr << "seed " << r->seed << ": " << r->what << '\n';
  }
  std::cout << json{{"count", count},
                    {"failures", failures},
                    {"detail", detail}}
                   .dump()
            << '\n';
  std::cerr << count << " instances, " << failures << " failures\n";
  return failures == 0 ? kExitOk : kExitError;
}

int cmd_gen(int n, std::uint64_t seed, const std::string& out) {
  const fd::ScenarioSpec spec = fd::generate_benchmark_scenario(n, seed);
  fd::save_scenario(spec, out);
  std::cout << json{{"devices", n}, {"seed", seed}, {"path", out}}.dump()
            << '\n';
  std::cerr << "scenario written to " << out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Storage-fleet dispatch: feasibility, optimal schedules and "
               "oracle verification"};
  app.require_subcommand(1);

  std::string scenario, method = "dispatch", out_csv;
  double slot_width = 0.0, tau_tol = 1e-6;
  int max_outer = 100, count = 1000, max_n = 5, max_slots = 8, gen_n = 20;
  std::uint64_t seed = 1;
  bool oracle_check = false;

  auto* feasible = app.add_subcommand("feasible", "Feasibility verdict");
  feasible->add_option("scenario", scenario)->required();
  feasible->add_option("--method", method)
      ->check(CLI::IsMember({"dispatch", "subset", "both"}));
  feasible->add_option("--slot-width", slot_width);
  feasible->add_option("--out", out_csv);

  auto* dispatch = app.add_subcommand("dispatch", "Write the dispatch schedule");
  dispatch->add_option("scenario", scenario)->required();
  dispatch->add_option("--out", out_csv)->default_val("schedule.csv");

  auto* minuns = app.add_subcommand("min-unserved", "Minimum unserved energy");
  minuns->add_option("scenario", scenario)->required();
  minuns->add_option("--out", out_csv);
  minuns->add_flag("--oracle-check", oracle_check);
  minuns->add_option("--slot-width", slot_width);

  auto* maxttf = app.add_subcommand("max-ttf", "Maximum time-to-failure");
  maxttf->add_option("scenario", scenario)->required();
  maxttf->add_option("--tau-tol", tau_tol);
  maxttf->add_option("--max-outer", max_outer);
  maxttf->add_option("--out", out_csv);
  maxttf->add_flag("--oracle-check", oracle_check);
  maxttf->add_option("--slot-width", slot_width);

  auto* bench = app.add_subcommand("bench", "Fixed-point timing table");
  std::string sizes = "10,50,100,250,500";
  bench->add_option("--sizes", sizes);
  bench->add_option("--seed", seed);
  bench->add_option("--out", out_csv);

  auto* ocheck = app.add_subcommand("oracle-check", "Randomized differential test");
  ocheck->add_option("--count", count);
  ocheck->add_option("--max-n", max_n);
  ocheck->add_option("--max-slots", max_slots);
  ocheck->add_option("--seed", seed);

  auto* gen = app.add_subcommand("gen", "Generate a scenario file");
  gen->add_option("--n", gen_n);
  gen->add_option("--seed", seed);
  gen->add_option("--out", out_csv)->default_val("scenario.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (feasible->parsed())
      return cmd_feasible(scenario, method, slot_width, out_csv);
    if (dispatch->parsed()) return cmd_dispatch(scenario, out_csv);
    if (minuns->parsed())
      return cmd_min_unserved(scenario, out_csv, oracle_check, slot_width);
    if (maxttf->parsed())
      return cmd_max_ttf(scenario, tau_tol, max_outer, out_csv, oracle_check,
                         slot_width);
    if (bench->parsed()) return cmd_bench(sizes, seed, out_csv);
    if (ocheck->parsed()) return cmd_oracle_check(count, max_n, max_slots, seed);
    if (gen->parsed()) return cmd_gen(gen_n, seed, out_csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
