#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "attackplan/error.hpp"
#include "attackplan/global_pomdp.hpp"
#include "attackplan/network.hpp"
#include "attackplan/pomdp.hpp"
#include "attackplan/scenario.hpp"
#include "attackplan/update_model.hpp"

#ifndef ATTACKPLAN_FIXTURES
#define ATTACKPLAN_FIXTURES "fixtures"
#endif

namespace testsupport {

using namespace attackplan;

inline std::string fixture(const std::string& rel) { return std::string(ATTACKPLAN_FIXTURES) + "/" + rel; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}
inline bool coin(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

// Random valid model: state 0 terminal, last action terminate.
inline PomdpModel random_pomdp(std::mt19937_64& rng, std::size_t max_states = 12, std::size_t max_actions = 5) {
  const std::size_t S = pick(rng, 2, max_states);
  const std::size_t A = pick(rng, 2, max_actions);
  const std::size_t O = pick(rng, 1, 3);
  std::vector<std::string> states{"terminal"};
  for (std::size_t s = 1; s < S; ++s) states.push_back("s" + std::to_string(s));
  std::vector<ActionInfo> actions;
  for (std::size_t a = 0; a + 1 < A; ++a)
    actions.push_back({"a" + std::to_string(a), -std::round(uniform(rng, 0, 20)), coin(rng, 0.3) ? -5.0 : 0.0});
  actions.push_back({"terminate", 0.0, 0.0});
  std::vector<std::string> obs;
  for (std::size_t o = 0; o < O; ++o) obs.push_back("o" + std::to_string(o));
  std::vector<Outcome> out;
  for (std::size_t a = 0; a < A; ++a) out.push_back({0, 0, 0.0});
  for (std::size_t s = 1; s < S; ++s) {
    for (std::size_t a = 0; a + 1 < A; ++a) {
      StateId next = coin(rng, 0.5) ? s : pick(rng, 1, S - 1);
      double gain = coin(rng, 0.3) ? std::round(uniform(rng, 0, 200)) : 0.0;
      out.push_back({next, pick(rng, 0, O - 1), gain});
    }
    out.push_back({0, 0, 0.0});
  }
  std::vector<std::pair<StateId, double>> b;
  double total = 0;
  for (std::size_t s = 1; s < S; ++s) {
    if (coin(rng, 0.6)) {
      double w = uniform(rng, 0.05, 1.0);
      b.emplace_back(s, w);
      total += w;
    }
  }
  if (b.empty()) {
    b.emplace_back(1, 1.0);
    total = 1.0;
  }
  for (auto& e : b) e.second /= total;
  return PomdpModel(states, actions, obs, 0, A - 1, out, Belief(b));
}

// ---- undirected graph oracles ----

struct Graph {
  std::size_t n = 0;
  std::set<std::pair<std::size_t, std::size_t>> edges;  // a < b

  bool adjacent(std::size_t a, std::size_t b) const { return edges.count({std::min(a, b), std::max(a, b)}) != 0; }
};

inline Graph undirected(const LogicalNetwork& net) {
  Graph g;
  g.n = net.subnet_count();
  for (const auto& e : net.edges()) g.edges.insert({std::min(e.from, e.to), std::max(e.from, e.to)});
  return g;
}

inline bool reaches(const Graph& g, std::size_t from, std::size_t to, const std::vector<bool>& banned) {
  if (banned[from] || banned[to]) return false;
  std::vector<bool> seen(g.n, false);
  std::vector<std::size_t> stack{from};
  seen[from] = true;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    for (std::size_t w = 0; w < g.n; ++w) {
      if (!seen[w] && !banned[w] && g.adjacent(v, w)) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  return false;
}

// Cycle a-b ~ c-d ~ a: a simple path b~c avoiding a and d, and a path d~a
// avoiding it.
inline bool cycle_through(const Graph& g, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  if (c == a || b == d) return false;
  std::vector<bool> on(g.n, false);
  bool found = false;
  std::function<void(std::size_t)> dfs = [&](std::size_t v) {
    on[v] = true;
    if (v == c) {
      found = d == a || reaches(g, d, a, on);
    } else {
      for (std::size_t w = 0; w < g.n && !found; ++w)
        if (!on[w] && w != a && w != d && g.adjacent(v, w)) dfs(w);
    }
    on[v] = false;
  };
  dfs(b);
  return found;
}

// Two distinct edges share a block iff a simple cycle runs through both.
inline bool common_cycle(const Graph& g, std::pair<std::size_t, std::size_t> e, std::pair<std::size_t, std::size_t> f) {
  auto [a, b] = e;
  auto [c, d] = f;
  return cycle_through(g, a, b, c, d) || cycle_through(g, a, b, d, c);
}

inline std::vector<std::vector<std::size_t>> oracle_blocks(const Graph& g) {
  std::vector<std::pair<std::size_t, std::size_t>> E(g.edges.begin(), g.edges.end());
  std::vector<std::size_t> cls(E.size());
  for (std::size_t i = 0; i < E.size(); ++i) cls[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) { return cls[x] == x ? x : cls[x] = find(cls[x]); };
  for (std::size_t i = 0; i < E.size(); ++i)
    for (std::size_t j = i + 1; j < E.size(); ++j)
      if (find(i) != find(j) && common_cycle(g, E[i], E[j])) cls[find(i)] = find(j);
  std::map<std::size_t, std::set<std::size_t>> blocks;
  std::vector<bool> touched(g.n, false);
  for (std::size_t i = 0; i < E.size(); ++i) {
    blocks[find(i)].insert(E[i].first);
    blocks[find(i)].insert(E[i].second);
    touched[E[i].first] = touched[E[i].second] = true;
  }
  std::vector<std::vector<std::size_t>> out;
  for (auto& [k, vs] : blocks) out.emplace_back(vs.begin(), vs.end());
  for (std::size_t v = 0; v < g.n; ++v)
    if (!touched[v]) out.push_back({v});
  std::sort(out.begin(), out.end());
  return out;
}

inline std::size_t connected_parts(const Graph& g, const std::vector<bool>& banned) {
  std::vector<bool> seen = banned;
  std::size_t parts = 0;
  for (std::size_t s = 0; s < g.n; ++s) {
    if (seen[s]) continue;
    ++parts;
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      for (std::size_t w = 0; w < g.n; ++w)
        if (!seen[w] && g.adjacent(v, w)) {
          seen[w] = true;
          stack.push_back(w);
        }
    }
  }
  return parts;
}

inline std::vector<std::size_t> oracle_cut_vertices(const Graph& g) {
  std::vector<bool> none(g.n, false);
  const auto base = connected_parts(g, none);
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < g.n; ++v) {
    std::vector<bool> banned(g.n, false);
    banned[v] = true;
    if (connected_parts(g, banned) > base) out.push_back(v);
  }
  return out;
}

inline LogicalNetwork random_network(std::mt19937_64& rng, std::size_t max_vertices = 10, double density = -1) {
  const std::size_t n = pick(rng, 1, max_vertices);
  if (density < 0) density = uniform(rng, 0.1, 0.5);
  std::vector<Subnetwork> subnets;
  for (std::size_t i = 0; i < n; ++i) subnets.push_back({"n" + std::to_string(i), {}});
  std::vector<EdgeSpec> edges;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b && coin(rng, density / 2)) edges.push_back({subnets[a].id, subnets[b].id, {}});
  return LogicalNetwork(subnets, edges, "n0");
}

// ---- scenarios ----

inline ActionTemplates load_templates13() { return action_templates_from_json(read_json_file(fixture("templates13.json"))); }
inline UpdateModel load_templates13_updates() {
  return update_model_from_json(read_json_file(fixture("templates13_update_model.json")));
}

inline MachineBelief template_belief(const UpdateModel& u, const MachineTemplate& tm,
                                     int days) {
  SnapshotConfig snap;
  snap.days = days;
  snap.machines.push_back({"m", tm.programs});
  return build_initial_belief(u, snap, "m");
}

// Small library: a gate, two services on ports 21/22 with two vulnerable
// versions each, a crash-prone patched version on the second.
inline ActionTemplates small_library(std::mt19937_64& rng, std::size_t exploits) {
  ActionTemplates t;
  auto& lib = t.library;
  lib.os_detection = false;
  lib.programs.push_back({"DEP", std::nullopt, false, {{"off", {true, false, false, ""}}, {"on", {true, false, true, ""}}}});
  for (int k = 0; k < 2; ++k) {
    ProgramSpec p{"svc" + std::to_string(k), 21 + k, false, {}};
    p.versions["absent"] = {false, false, false, ""};
    p.versions["patched"] = {true, k == 1, false, ""};
    p.versions["va"] = {true, false, false, ""};
    p.versions["vb"] = {true, false, false, ""};
    lib.programs.push_back(p);
  }
  for (std::size_t i = 0; i < exploits; ++i) {
    ExploitSpec e;
    e.name = "x" + std::to_string(i);
    std::size_t k = pick(rng, 0, 1);
    e.program = "svc" + std::to_string(k);
    e.versions = {coin(rng, 0.5) ? "va" : "vb"};
    if (coin(rng, 0.3)) e.versions.push_back(e.versions[0] == "va" ? "vb" : "va");
    if (coin(rng, 0.4)) e.gates = {"DEP"};
    e.crash = k == 1 ? (coin(rng, 0.5) ? CrashScope::machine : CrashScope::program) : CrashScope::none;
    e.time_cost = -std::round(uniform(rng, 1, 20));
    e.detection_cost = coin(rng, 0.3) ? -5.0 : 0.0;
    lib.exploits.push_back(e);
  }
  for (int k = 0; k < 4; ++k) {
    MachineTemplate tm{"t" + std::to_string(k), {}};
    if (k & 1) tm.programs.push_back({"DEP", "off"});
    tm.programs.push_back({"svc0", k < 2 ? "va" : "vb"});
    if (k >= 1) tm.programs.push_back({"svc1", k == 3 ? "vb" : "va"});
    t.templates.push_back(tm);
  }
  lib.validate();
  return t;
}

inline UpdateModel small_updates(std::mt19937_64& rng) {
  std::vector<ProgramChain> chains;
  ProgramChain dep{"DEP", {"off", "on"}, Eigen::MatrixXd(2, 2)};
  double p = uniform(rng, 0.0, 0.05);
  dep.transition << 1 - p, p, 0, 1;
  chains.push_back(dep);
  for (int k = 0; k < 2; ++k) {
    ProgramChain c{"svc" + std::to_string(k), {"absent", "patched", "va", "vb"}, Eigen::MatrixXd::Zero(4, 4)};
    double rm = uniform(rng, 0, 0.02), up = uniform(rng, 0, 0.03), sw = uniform(rng, 0, 0.02);
    c.transition(0, 0) = 1;
    c.transition(1, 0) = rm;
    c.transition(1, 1) = 1 - rm;
    c.transition(2, 0) = rm;
    c.transition(2, 1) = up;
    c.transition(2, 3) = sw;
    c.transition(2, 2) = 1 - rm - up - sw;
    c.transition(3, 0) = rm;
    c.transition(3, 1) = up;
    c.transition(3, 3) = 1 - rm - up;
    chains.push_back(c);
  }
  return UpdateModel(chains, {});
}

struct RandomScenarioOptions {
  std::size_t max_subnets = 3;  // besides the root
  std::size_t max_machines = 4;
  std::size_t max_exploits = 4;
  bool tree_singletons = false;  // one machine per subnet, edges forming a tree from the root
};

inline Scenario random_scenario(std::mt19937_64& rng, const RandomScenarioOptions& opt = {}) {
  auto actions = small_library(rng, pick(rng, 1, opt.max_exploits));
  auto updates = small_updates(rng);
  const std::size_t machines = pick(rng, 1, opt.max_machines);
  const std::size_t ns = opt.tree_singletons ? machines : pick(rng, 1, opt.max_subnets);
  std::vector<Subnetwork> subnets{{"*", {}}};
  for (std::size_t i = 0; i < ns; ++i) subnets.push_back({"N" + std::to_string(i + 1), {}});
  for (std::size_t m = 0; m < machines; ++m) {
    std::size_t s = opt.tree_singletons ? m + 1 : pick(rng, 1, ns);
    subnets[s].machines.push_back("m" + std::to_string(m));
  }
  auto firewall = [&] {
    Firewall f;
    if (coin(rng, 0.3)) f.blocked_ports.insert(21);
    if (coin(rng, 0.3)) f.blocked_ports.insert(22);
    return f;
  };
  std::vector<EdgeSpec> edges;
  if (opt.tree_singletons) {
    for (std::size_t i = 1; i <= ns; ++i) edges.push_back({subnets[pick(rng, 0, i - 1)].id, subnets[i].id, firewall()});
  } else {
    for (std::size_t a = 0; a <= ns; ++a)
      for (std::size_t b = 1; b <= ns; ++b)
        if (a != b && coin(rng, 0.5)) edges.push_back({subnets[a].id, subnets[b].id, firewall()});
  }
  LogicalNetwork net(subnets, edges, "*");
  std::vector<MachineInfo> infos;
  SnapshotConfig snap;
  snap.days = static_cast<int>(pick(rng, 0, 40));
  for (const auto& id : net.machine_ids()) {
    const auto& tm = actions.templates[pick(rng, 0, actions.templates.size() - 1)];
    double value = coin(rng, 0.6) ? std::round(uniform(rng, 50, 1000)) : 0.0;
    infos.push_back({id, value, tm.name});
    snap.machines.push_back({id, tm.programs});
  }
  Scenario s{std::move(net), std::move(infos), std::move(snap), std::move(updates), std::move(actions)};
  s.validate();
  return s;
}

// Global model of a random scenario, or nothing when it is too big for an
// exact solve inside a test (the solver is exponential in the action count).
inline std::optional<GlobalModel> small_global(const Scenario& s, std::size_t max_actions = 16,
                                               std::size_t max_states = 20'000) {
  try {
    auto g = create_global_pomdp(s, GlobalModelOptions{max_states});
    if (g.model.action_count() > max_actions) return std::nullopt;
    return g;
  } catch (const Error& e) {
    if (e.category() != ErrorCategory::capacity) throw;
    return std::nullopt;
  }
}

// Cleaned network is a tree of one-subnet components each holding at most one machine.
inline bool is_singleton_tree(const CleanedNetwork& c) {
  for (const auto& comp : c.tree.components) {
    if (comp.subnets.size() != 1) return false;
    if (c.network.subnet(comp.subnets[0]).machines.size() > 1) return false;
  }
  return true;
}

}  // namespace testsupport

namespace testsupport {

// Scenario over the running-example library; every machine uses the one
// template. `subnets` lists (id, machines); machine values default to 0.
inline Scenario workstation_scenario(std::vector<Subnetwork> subnets, std::vector<EdgeSpec> edges,
                                     std::map<std::string, double> values, int days = 30) {
  auto t = action_templates_from_json(read_json_file(fixture("running_example/actions.json")));
  auto u = update_model_from_json(read_json_file(fixture("running_example/update_model.json")));
  LogicalNetwork net(std::move(subnets), edges, "*");
  std::vector<MachineInfo> infos;
  SnapshotConfig snap;
  snap.days = days;
  for (const auto& id : net.machine_ids()) {
    infos.push_back({id, values.count(id) ? values.at(id) : 0.0, "workstation"});
    snap.machines.push_back({id, t.find("workstation").programs});
  }
  Scenario s{std::move(net), std::move(infos), std::move(snap), std::move(u), std::move(t)};
  s.validate();
  return s;
}

}  // namespace testsupport
