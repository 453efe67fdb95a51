#include "attackplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "attackplan/error.hpp"

namespace attackplan {

using nlohmann::json;

std::string_view to_string(TargetOrder order) {
  return order == TargetOrder::reward_desc ? "reward_desc" : "lexicographic";
}

Level4Ptr Level4Cache::find(const Key& key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  ++hits_;
  return it->second;
}

void Level4Cache::insert(const Key& key, Level4Ptr result) {
  ++solves_;
  entries_.emplace(key, std::move(result));
}

namespace {

std::string belief_signature(const MachineBelief& b) {
  std::ostringstream out;
  for (std::size_t p = 0; p < b.programs.size(); ++p) {
    out << b.programs[p] << '(';
    for (const auto& v : b.version_names[p]) out << v << ',';
    out << ')';
  }
  char buf[40];
  for (const auto& e : b.entries) {
    out << '|';
    for (auto v : e.versions) out << v << '.';
    std::snprintf(buf, sizeof buf, "%a", e.probability);
    out << buf;
  }
  return out.str();
}

}  // namespace

Planner::Planner(const Scenario& scenario, PlannerOptions options)
    : scenario_(scenario), options_(options), cleaned_(clean_up(scenario.network)) {
  std::map<std::string, std::size_t> class_of_signature;
  for (const auto& m : scenario_.machines) {
    auto belief = scenario_.belief(m.id);
    auto sig = belief_signature(belief);
    auto [it, inserted] = class_of_signature.emplace(sig, classes_.size());
    if (inserted)
      classes_.push_back({std::make_shared<const MachineDynamics>(scenario_.actions.library, std::move(belief))});
    machines_[m.id] = {it->second};
    reward_[m.id] = m.value;
  }
  pr_.assign(cleaned_.network.subnet_count(), 0.0);
  pr_total_ = pr_;
}

std::size_t Planner::machine_class(const std::string& machine) const {
  auto it = machines_.find(machine);
  if (it == machines_.end()) fail(ErrorCategory::invalid_input, "unknown machine '" + machine + "'");
  return it->second.cls;
}

std::shared_ptr<const MachineDynamics> Planner::dynamics(const std::string& machine) const {
  return classes_[machine_class(machine)].dynamics;
}

Level4Ptr Planner::level4(const std::string& machine, const Firewall& firewall, double reward) {
  if (!(reward >= 0.0)) fail(ErrorCategory::internal, "negative break-in reward for '" + machine + "'");
  Level4Cache::Key key{machine_class(machine), firewall, std::llround(reward * 1e9)};
  if (key.reward_nano == 0) {
    cache_.count_trivial();
    return std::make_shared<const Level4Result>();
  }
  if (auto hit = cache_.find(key)) return hit;

  const auto& dynamics = *classes_[key.machine_class].dynamics;
  MachinePomdpRequest request{machine, firewall, static_cast<double>(key.reward_nano) / 1e9, dynamics.belief()};
  auto model = std::make_shared<const MachineModel>(build_machine_model(request, dynamics, options_.model_options));
  SolveResult solved = options_.merge_states ? solve_exact(merge_indistinguishable_states(model->model))
                                             : solve_exact(model->model);
  auto result = std::make_shared<const Level4Result>(Level4Result{solved.value, solved.policy, model});
  cache_.insert(key, result);
  return result;
}

double Planner::level3(SubnetIndex subnet, const Firewall& firewall, double pivot_reward, double path_reward,
                       VertexAttack* record) {
  const auto& machines = cleaned_.network.subnet(subnet).machines;
  static const Firewall open;
  double best = 0.0;
  std::optional<std::size_t> best_index;
  double best_reward = 0.0;
  Level4Ptr best_plan;
  for (std::size_t i = 0; i < machines.size(); ++i) {
    double residual = 0.0;
    for (std::size_t k = 0; k < machines.size(); ++k) {
      if (k != i) residual += level4(machines[k], open, reward_.at(machines[k]))->value;
    }
    double R = reward_.at(machines[i]) + pivot_reward + path_reward + residual;
    auto plan = level4(machines[i], firewall, R);
    if (!best_index || plan->value > best) {
      best = plan->value;
      best_index = i;
      best_reward = R;
      best_plan = plan;
    }
  }
  if (record && best_index) {
    record->subnet = subnet;
    record->first_machine = machines[*best_index];
    record->firewall = firewall;
    record->reward = best_reward;
    record->value = best;
    record->first = best_plan;
    record->residual.clear();
    for (std::size_t k = 0; k < machines.size(); ++k) {
      if (k != *best_index)
        record->residual.push_back({machines[k], level4(machines[k], open, reward_.at(machines[k]))});
    }
    std::sort(record->residual.begin(), record->residual.end(), [&](const auto& a, const auto& b) {
      double ra = reward_.at(a.machine), rb = reward_.at(b.machine);
      return ra != rb ? ra > rb : a.machine < b.machine;
    });
  }
  return std::max(0.0, best);
}

double Planner::subnet_reward(SubnetIndex subnet) const {
  double r = 0.0;
  for (const auto& m : cleaned_.network.subnet(subnet).machines) r += reward_.at(m);
  return r;
}

std::vector<std::pair<std::vector<SubnetIndex>, std::vector<Firewall>>> Planner::simple_paths(std::size_t component,
                                                                                                 SubnetIndex target) {
  const auto& net = cleaned_.network;
  const auto& tree = cleaned_.tree;
  const auto& comp = tree.components.at(component);
  std::vector<std::pair<std::vector<SubnetIndex>, std::vector<Firewall>>> out;
  std::vector<SubnetIndex> vertices;
  std::vector<Firewall> firewalls;
  std::vector<bool> on_path(net.subnet_count(), false);
  std::size_t count = 0;

  std::function<void(SubnetIndex)> dfs = [&](SubnetIndex v) {
    if (v == target) {
      if (++count > options_.max_paths)
        fail(ErrorCategory::capacity, "more than " + std::to_string(options_.max_paths) +
                                          " simple paths to subnet '" + net.subnet(target).id + "'");
      out.emplace_back(vertices, firewalls);
      return;
    }
    for (const Edge* e : net.out_edges(v)) {
      if (on_path[e->to] || tree.component_of[e->to] != component || e->to == net.root()) continue;
      on_path[e->to] = true;
      vertices.push_back(e->to);
      firewalls.push_back(e->firewall);
      dfs(e->to);
      vertices.pop_back();
      firewalls.pop_back();
      on_path[e->to] = false;
    }
  };

  for (SubnetIndex entry : tree.entries(net, component)) {
    on_path[entry] = true;
    vertices = {entry};
    firewalls = {net.edge(*comp.parent_subnet, entry)->firewall};
    dfs(entry);
    on_path[entry] = false;
  }
  paths_enumerated_ += count;
  return out;
}

double Planner::score_path(const std::vector<SubnetIndex>& vertices, const std::vector<Firewall>& firewalls,
                           PathPlan* record) {
  if (record) record->attacks.assign(vertices.size(), {});
  double R = 0.0;
  for (std::size_t i = vertices.size(); i-- > 0;)
    R = level3(vertices[i], firewalls[i], pr_[vertices[i]], R, record ? &record->attacks[i] : nullptr);
  return R;
}

double Planner::level2(std::size_t component, ComponentPlan* record) {
  const auto& net = cleaned_.network;
  const auto& comp = cleaned_.tree.components.at(component);
  double total = 0.0;
  while (true) {
    std::vector<SubnetIndex> targets;
    for (SubnetIndex n : comp.subnets) {
      if (subnet_reward(n) > 0.0 || pr_[n] > 0.0) targets.push_back(n);
    }
    if (targets.empty()) break;
    auto by_id = [&](SubnetIndex a, SubnetIndex b) { return net.subnet(a).id < net.subnet(b).id; };
    if (options_.target_order == TargetOrder::reward_desc) {
      std::sort(targets.begin(), targets.end(), [&](SubnetIndex a, SubnetIndex b) {
        double ra = subnet_reward(a) + pr_[a], rb = subnet_reward(b) + pr_[b];
        return ra != rb ? ra > rb : by_id(a, b);
      });
    } else {
      std::sort(targets.begin(), targets.end(), by_id);
    }
    const SubnetIndex target = targets.front();

    double best = 0.0;
    const std::pair<std::vector<SubnetIndex>, std::vector<Firewall>>* best_path = nullptr;
    auto paths = simple_paths(component, target);
    for (const auto& p : paths) {
      double v = score_path(p.first, p.second, nullptr);
      if (!best_path || v > best) {
        best = v;
        best_path = &p;
      }
    }

    if (best_path) {
      if (record && best > 0.0) {
        PathPlan plan;
        plan.target = target;
        plan.vertices = best_path->first;
        plan.firewalls = best_path->second;
        plan.value = score_path(plan.vertices, plan.firewalls, &plan);
        record->paths.push_back(std::move(plan));
      }
      total += best;
      for (SubnetIndex v : best_path->first) {
        for (const auto& m : net.subnet(v).machines) {
          if (reward_[m] > 0.0) claims_.push_back({RewardClaim::Kind::machine, m, reward_[m], component});
          reward_[m] = 0.0;
        }
        if (pr_[v] > 0.0) claims_.push_back({RewardClaim::Kind::pivot, net.subnet(v).id, pr_[v], component});
        pr_[v] = 0.0;
      }
    }
    // The target is settled even when no entry path reaches it.
    for (const auto& m : net.subnet(target).machines) reward_[m] = 0.0;
    pr_[target] = 0.0;
  }
  if (record) record->value = total;
  return total;
}

AttackPolicy Planner::plan() {
  const auto& tree = cleaned_.tree;
  std::vector<ComponentPlan> plans(tree.components.size());
  for (std::size_t c = 0; c < tree.components.size(); ++c) {
    plans[c].component = c;
    plans[c].parent_subnet = tree.components[c].parent_subnet;
  }
  for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
    const std::size_t c = *it;
    if (c == 0) continue;
    double v = level2(c, &plans[c]);
    const SubnetIndex parent = *tree.components[c].parent_subnet;
    pr_[parent] += v;
    pr_total_[parent] += v;
  }
  const SubnetIndex root = cleaned_.network.root();
  double value = pr_[root];
  plans[0].value = value;
  return AttackPolicy{cleaned_, std::move(plans), pr_total_, claims_, value};
}

json planner_report(const AttackPolicy& policy, const Planner& planner) {
  const auto& net = policy.cleaned.network;
  auto firewall_json = [](const Firewall& f) {
    return std::vector<int>(f.blocked_ports.begin(), f.blocked_ports.end());
  };
  json components = json::array();
  for (const auto& cp : policy.components) {
    const auto& comp = policy.cleaned.tree.components[cp.component];
    json subnets = json::array();
    for (SubnetIndex s : comp.subnets) subnets.push_back(net.subnet(s).id);
    json paths = json::array();
    for (const auto& p : cp.paths) {
      json vertices = json::array();
      json firewalls = json::array();
      json attacks = json::array();
      for (std::size_t i = 0; i < p.vertices.size(); ++i) {
        vertices.push_back(net.subnet(p.vertices[i]).id);
        firewalls.push_back(firewall_json(p.firewalls[i]));
        const auto& a = p.attacks[i];
        json residual = json::array();
        for (const auto& r : a.residual) residual.push_back(r.machine);
        attacks.push_back({{"subnet", net.subnet(a.subnet).id},
                           {"first_machine", a.first_machine},
                           {"reward", a.reward},
                           {"value", a.value},
                           {"residual_order", residual}});
      }
      paths.push_back({{"target", net.subnet(p.target).id},
                       {"vertices", vertices},
                       {"firewalls", firewalls},
                       {"value", p.value},
                       {"attacks", attacks}});
    }
    json jc = {{"id", cp.component}, {"subnets", subnets}, {"value", cp.value}, {"paths", paths}};
    jc["parent_subnet"] = cp.parent_subnet ? json(net.subnet(*cp.parent_subnet).id) : json(nullptr);
    components.push_back(jc);
  }
  json pr = json::object();
  for (SubnetIndex s = 0; s < net.subnet_count(); ++s) pr[net.subnet(s).id] = policy.pivot_rewards[s];
  const auto& cache = planner.cache();
  return {{"value", policy.value},
          {"components", components},
          {"pivot_rewards", pr},
          {"cache", {{"solves", cache.solves()}, {"hits", cache.hits()}, {"trivial", cache.trivial()},
                     {"entries", cache.size()}}},
          {"paths_enumerated", planner.paths_enumerated()},
          {"options", {{"target_order", std::string(to_string(planner.options().target_order))},
                       {"max_paths", planner.options().max_paths},
                       {"merge_states", planner.options().merge_states}}}};
}

}  // namespace attackplan
