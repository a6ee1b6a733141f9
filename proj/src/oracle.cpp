#include "fleetdispatch/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fleetdispatch/rng.hpp"
#include "json.hpp"

namespace fleetdispatch {

namespace {

constexpr double kScale = 1e6;  // 1e-6 kWh resolution

std::int64_t to_units(double kwh, const char* what) {
  const double scaled = kwh * kScale;
  const double rounded = std::nearbyint(scaled);
  if (std::abs(scaled - rounded) > 1e-2)
    throw std::invalid_argument(std::string("oracle: ") + what +
                                " is not representable at 1e-6 kWh resolution");
  return static_cast<std::int64_t>(rounded);
}

// Dinic maximum flow on a small integer-capacity network.
class FlowNetwork {
 public:
  explicit FlowNetwork(int nodes) : adj_(static_cast<std::size_t>(nodes)) {}

  int add_edge(int from, int to, std::int64_t cap) {
    const int id = static_cast<int>(edges_.size());
    edges_.push_back({to, cap, 0});
    adj_[static_cast<std::size_t>(from)].push_back(id);
    edges_.push_back({from, 0, 0});
    adj_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  // Pre-load an existing feasible routing along edge id.
  void push_flow(int id, std::int64_t amount) {
    edges_[static_cast<std::size_t>(id)].flow += amount;
    edges_[static_cast<std::size_t>(id ^ 1)].flow -= amount;
  }

  std::int64_t residual(int id) const {
    const auto& e = edges_[static_cast<std::size_t>(id)];
    return e.cap - e.flow;
  }

  std::int64_t flow_on(int id) const {
    return edges_[static_cast<std::size_t>(id)].flow;
  }

  std::int64_t max_flow(int s, int t) {
    std::int64_t total = 0;
    while (bfs(s, t)) {
      iter_.assign(adj_.size(), 0);
      while (std::int64_t pushed = dfs(s, t, INT64_MAX)) total += pushed;
    }
    return total;
  }

 private:
  struct Edge {
    int to;
    std::int64_t cap;
    std::int64_t flow;
  };

  bool bfs(int s, int t) {
    level_.assign(adj_.size(), -1);
    level_[static_cast<std::size_t>(s)] = 0;
    std::vector<int> queue{s};
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int u = queue[head];
      for (int id : adj_[static_cast<std::size_t>(u)]) {
        const auto& e = edges_[static_cast<std::size_t>(id)];
        if (e.cap - e.flow > 0 && level_[static_cast<std::size_t>(e.to)] < 0) {
          level_[static_cast<std::size_t>(e.to)] =
              level_[static_cast<std::size_t>(u)] + 1;
          queue.push_back(e.to);
        }
      }
    }
    return level_[static_cast<std::size_t>(t)] >= 0;
  }

  std::int64_t dfs(int u, int t, std::int64_t limit) {
    if (u == t) return limit;
    auto& it = iter_[static_cast<std::size_t>(u)];
    for (; it < adj_[static_cast<std::size_t>(u)].size(); ++it) {
      const int id = adj_[static_cast<std::size_t>(u)][it];
      auto& e = edges_[static_cast<std::size_t>(id)];
      if (e.cap - e.flow <= 0) continue;
      if (level_[static_cast<std::size_t>(e.to)] !=
          level_[static_cast<std::size_t>(u)] + 1)
        continue;
      const std::int64_t pushed =
          dfs(e.to, t, std::min(limit, e.cap - e.flow));
      if (pushed > 0) {
        e.flow += pushed;
        edges_[static_cast<std::size_t>(id ^ 1)].flow -= pushed;
        return pushed;
      }
    }
    return 0;
  }

  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> iter_;
};

struct BuiltNetwork {
  FlowNetwork net;
  std::vector<int> source_edges;              // per device
  std::vector<std::vector<int>> middle_edges; // [device][slot], -1 if absent
  std::vector<int> sink_edges;                // per slot
  std::int64_t total_demand = 0;
  int source = 0;
  int sink = 0;
};

BuiltNetwork build_network(const DiscreteInstance& inst, int prefix_slots) {
  const int n = static_cast<int>(inst.device_count());
  const int t = prefix_slots;
  BuiltNetwork b{FlowNetwork(n + t + 2), {}, {}, {}, 0, 0, n + t + 1};
  for (int j = 0; j < n; ++j)
    b.source_edges.push_back(b.net.add_edge(
        b.source, 1 + j,
        to_units(inst.supply[static_cast<std::size_t>(j)], "device supply")));
  b.middle_edges.assign(static_cast<std::size_t>(n),
                        std::vector<int>(static_cast<std::size_t>(t), -1));
  for (int j = 0; j < n; ++j) {
    const std::int64_t cap = to_units(
        inst.rated_power[static_cast<std::size_t>(j)] * inst.slot_width,
        "device slot cap");
    for (int k = 0; k < t; ++k)
      if (inst.available[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)])
        b.middle_edges[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
            b.net.add_edge(1 + j, 1 + n + k, cap);
  }
  for (int k = 0; k < t; ++k) {
    const std::int64_t d =
        to_units(inst.demand[static_cast<std::size_t>(k)], "slot demand");
    b.sink_edges.push_back(b.net.add_edge(1 + n + k, b.sink, d));
    b.total_demand += d;
  }
  return b;
}

DispatchSchedule decompose(const DiscreteInstance& inst, std::uint64_t seed,
                           bool require_feasible) {
  const int n = static_cast<int>(inst.device_count());
  const int t = inst.slots;
  BuiltNetwork b = build_network(inst, t);

  // Seeded greedy pre-routing, completed to a maximum flow on the residual
  // network; distinct seeds therefore sample distinct decompositions.
  SplitMix64 rng(seed);
  std::vector<std::int64_t> supply_left(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    supply_left[static_cast<std::size_t>(j)] =
        to_units(inst.supply[static_cast<std::size_t>(j)], "supply");
  std::vector<int> slot_order(static_cast<std::size_t>(t));
  std::iota(slot_order.begin(), slot_order.end(), 0);
  shuffle_portable(slot_order, rng);
  for (int k : slot_order) {
    std::int64_t demand_left =
        to_units(inst.demand[static_cast<std::size_t>(k)], "demand");
    std::vector<int> dev_order(static_cast<std::size_t>(n));
    std::iota(dev_order.begin(), dev_order.end(), 0);
    shuffle_portable(dev_order, rng);
    for (int j : dev_order) {
      if (demand_left == 0) break;
      const int mid =
          b.middle_edges[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      if (mid < 0) continue;
      const std::int64_t amt =
          std::min({demand_left, b.net.residual(mid),
                    supply_left[static_cast<std::size_t>(j)]});
      if (amt <= 0) continue;
      b.net.push_flow(b.source_edges[static_cast<std::size_t>(j)], amt);
      b.net.push_flow(mid, amt);
      b.net.push_flow(b.sink_edges[static_cast<std::size_t>(k)], amt);
      supply_left[static_cast<std::size_t>(j)] -= amt;
      demand_left -= amt;
    }
  }
  b.net.max_flow(b.source, b.sink);

  std::int64_t served = 0;
  for (int k = 0; k < t; ++k)
    served += b.net.flow_on(b.sink_edges[static_cast<std::size_t>(k)]);
  if (require_feasible && served != b.total_demand)
    throw std::invalid_argument("oracle_schedule: instance is infeasible");

  DispatchSchedule sched;
  sched.breakpoints.resize(static_cast<std::size_t>(t) + 1);
  for (int k = 0; k <= t; ++k)
    sched.breakpoints[static_cast<std::size_t>(k)] = k * inst.slot_width;
  sched.rates.assign(static_cast<std::size_t>(t),
                     std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < t; ++k) {
      const int mid =
          b.middle_edges[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      if (mid < 0) continue;
      const double kwh =
          static_cast<double>(b.net.flow_on(mid)) / kScale;
      sched.rates[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] =
          kwh / inst.slot_width;
    }
  return sched;
}

bool prefix_feasible(const DiscreteInstance& inst, int prefix) {
  BuiltNetwork b = build_network(inst, prefix);
  return b.net.max_flow(b.source, b.sink) == b.total_demand;
}

}  // namespace

double DiscreteInstance::total_demand() const {
  return std::accumulate(demand.begin(), demand.end(), 0.0);
}

DiscreteInstance discretize(const Fleet& fleet, const DemandProfile& demand,
                            double slot_width) {
  if (!(slot_width > 0.0))
    throw std::invalid_argument("discretize: slot width must be positive");
  auto slot_of = [slot_width](double t, const char* what) {
    const double q = t / slot_width;
    const double r = std::nearbyint(q);
    if (std::abs(q - r) > 1e-9)
      throw std::invalid_argument(std::string("discretize: ") + what +
                                  " is not aligned to the slot grid");
    return static_cast<int>(r);
  };
  const int slots = slot_of(fleet.horizon, "horizon");
  for (double bp : demand.breakpoints) slot_of(bp, "demand breakpoint");

  DiscreteInstance inst;
  inst.slots = slots;
  inst.slot_width = slot_width;
  inst.supply.reserve(fleet.size());
  inst.rated_power.reserve(fleet.size());
  for (const auto& dev : fleet.devices) {
    inst.supply.push_back(dev.initial_energy);
    inst.rated_power.push_back(dev.rated_power);
    std::vector<char> avail(static_cast<std::size_t>(slots), 0);
    for (const auto& iv : dev.availability.intervals()) {
      const int lo = slot_of(iv.start, "availability endpoint");
      const int hi = slot_of(iv.end, "availability endpoint");
      for (int k = lo; k < hi; ++k) avail[static_cast<std::size_t>(k)] = 1;
    }
    inst.available.push_back(std::move(avail));
  }
  inst.demand.resize(static_cast<std::size_t>(slots));
  for (int k = 0; k < slots; ++k)
    inst.demand[static_cast<std::size_t>(k)] =
        demand.value_at((k + 0.5) * slot_width) * slot_width;
  return inst;
}

double maxflow_value(const DiscreteInstance& inst) {
  BuiltNetwork b = build_network(inst, inst.slots);
  return static_cast<double>(b.net.max_flow(b.source, b.sink)) / kScale;
}

bool oracle_feasible(const DiscreteInstance& inst) {
  BuiltNetwork b = build_network(inst, inst.slots);
  return b.net.max_flow(b.source, b.sink) == b.total_demand;
}

double oracle_min_unserved(const DiscreteInstance& inst) {
  BuiltNetwork b = build_network(inst, inst.slots);
  const std::int64_t flow = b.net.max_flow(b.source, b.sink);
  return static_cast<double>(b.total_demand - flow) / kScale;
}

int oracle_max_ttf(const DiscreteInstance& inst, bool bisect) {
  if (!bisect) {
    int p = 0;
    while (p < inst.slots && prefix_feasible(inst, p + 1)) ++p;
    return p;
  }
  int lo = 0, hi = inst.slots;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (prefix_feasible(inst, mid))
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

DispatchSchedule oracle_schedule(const DiscreteInstance& inst,
                                 std::uint64_t seed) {
  return decompose(inst, seed, true);
}

DispatchSchedule oracle_best_effort_schedule(const DiscreteInstance& inst,
                                             std::uint64_t seed) {
  return decompose(inst, seed, false);
}

std::string DiscreteInstance::to_json() const {
  nlohmann::json j;
  j["slots"] = slots;
  j["slot_width"] = slot_width;
  j["supply"] = supply;
  j["rated_power"] = rated_power;
  j["demand"] = demand;
  auto& av = j["available"] = nlohmann::json::array();
  for (const auto& row : available) {
    nlohmann::json r = nlohmann::json::array();
    for (char c : row) r.push_back(c != 0);
    av.push_back(std::move(r));
  }
  return j.dump();
}

DiscreteInstance DiscreteInstance::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  DiscreteInstance inst;
  inst.slots = j.at("slots").get<int>();
  inst.slot_width = j.at("slot_width").get<double>();
  inst.supply = j.at("supply").get<std::vector<double>>();
  inst.rated_power = j.at("rated_power").get<std::vector<double>>();
  inst.demand = j.at("demand").get<std::vector<double>>();
  for (const auto& row : j.at("available")) {
    std::vector<char> r;
    for (const auto& v : row) r.push_back(v.get<bool>() ? 1 : 0);
    inst.available.push_back(std::move(r));
  }
  return inst;
}

}  // namespace fleetdispatch
