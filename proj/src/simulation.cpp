#include "attackplan/simulation.hpp"

#include <cmath>

#include "attackplan/error.hpp"

namespace attackplan {

SimulationReport summarize(const std::vector<double>& returns, std::uint64_t seed) {
  SimulationReport r;
  r.runs = returns.size();
  r.seed = seed;
  if (returns.empty()) return r;
  double sum = 0.0;
  for (double x : returns) sum += x;
  r.mean = sum / static_cast<double>(r.runs);
  if (r.runs > 1) {
    double ss = 0.0;
    for (double x : returns) ss += (x - r.mean) * (x - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(r.runs - 1));
  }
  r.half_width = 1.96 * r.stddev / std::sqrt(static_cast<double>(r.runs));
  return r;
}

nlohmann::json to_json(const SimulationReport& report) {
  return {{"runs", report.runs},
          {"mean", report.mean},
          {"stddev", report.stddev},
          {"half_width", report.half_width},
          {"seed", report.seed}};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t run) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (run + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::size_t sample_index(const std::vector<double>& weights, std::mt19937_64& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (weights.empty() || !(total > 0.0)) fail(ErrorCategory::internal, "cannot sample from an empty distribution");
  double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // Rounding can leave u just above the last partial sum.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

SimulationReport simulate_policy_mc(const PomdpModel& model, const PolicyNode& policy, std::size_t runs,
                                    std::uint64_t seed) {
  if (runs == 0) fail(ErrorCategory::invalid_input, "at least one simulation run is required");
  std::vector<double> weights;
  for (const auto& e : model.initial_belief().entries()) weights.push_back(e.second);
  std::vector<double> returns;
  returns.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    StateId s = model.initial_belief().entries()[sample_index(weights, rng)].first;
    double total = 0.0;
    const PolicyNode* node = &policy;
    std::size_t steps = 0;
    while (node && node->action != model.terminate()) {
      if (++steps > model.action_count())
        fail(ErrorCategory::internal, "policy plays more steps than there are actions");
      const auto& out = model.outcome(s, node->action);
      total += model.reward(s, node->action);
      s = out.next;
      node = node->child(out.observation);
    }
    returns.push_back(total);
  }
  return summarize(returns, seed);
}

TrueConfiguration sample_configuration(const std::vector<const MachineBelief*>& beliefs, std::mt19937_64& rng) {
  TrueConfiguration config;
  config.reserve(beliefs.size());
  std::vector<double> weights;
  for (const auto* b : beliefs) {
    weights.clear();
    for (const auto& e : b->entries) weights.push_back(e.probability);
    config.push_back(sample_index(weights, rng));
  }
  return config;
}

namespace {

struct NetworkRun {
  const Planner& planner;
  const Scenario& scenario;
  std::map<std::string, std::size_t> local;  // machine -> local state
  double total = 0.0;

  // Follows one Level-4 plan; returns whether the machine ends up controlled.
  bool attack(const std::string& machine, const Level4Result& plan, const Firewall& firewall) {
    auto dynamics = planner.dynamics(machine);
    std::size_t& state = local.at(machine);
    if (!plan.model || !plan.policy) return state == MachineDynamics::kControlled;
    const auto& model = plan.model->model;
    const PolicyNode* node = plan.policy.get();
    std::size_t steps = 0;
    while (node && node->action != model.terminate()) {
      if (++steps > model.action_count())
        fail(ErrorCategory::internal, "machine policy for '" + machine + "' repeats actions");
      const auto& info = model.action(node->action);
      total += info.time_cost + info.detection_cost;
      auto dyn = plan.model->dynamics_action[node->action];
      std::string observation = "none";
      if (dyn) {
        const auto& spec = dynamics->actions()[*dyn];
        if (spec.port && firewall.blocks(*spec.port))
          fail(ErrorCategory::internal, "action '" + spec.name + "' on '" + machine + "' crosses a firewall blocking port " +
                                            std::to_string(*spec.port));
        const auto& step = dynamics->step(state, *dyn);
        if (step.success && state != MachineDynamics::kControlled) total += scenario.value(machine);
        state = step.next;
        observation = step.observation;
      }
      auto o = model.find_observation(observation);
      if (!o) fail(ErrorCategory::internal, "observation '" + observation + "' unknown to the plan for '" + machine + "'");
      node = node->child(*o);
    }
    return state == MachineDynamics::kControlled;
  }
};

}  // namespace

double execute_attack_policy(const AttackPolicy& policy, const Planner& planner, const Scenario& scenario,
                             const TrueConfiguration& config) {
  if (config.size() != scenario.machines.size()) fail(ErrorCategory::internal, "configuration size mismatch");
  NetworkRun run{planner, scenario, {}, 0.0};
  for (std::size_t i = 0; i < scenario.machines.size(); ++i) {
    const auto& id = scenario.machines[i].id;
    run.local[id] = planner.dynamics(id)->entry_state(config[i]);
  }

  const auto& net = policy.cleaned.network;
  const auto& tree = policy.cleaned.tree;
  std::vector<bool> entered(net.subnet_count(), false);
  entered[net.root()] = true;
  for (std::size_t c : tree.order) {
    if (c == 0) continue;
    const auto& plan = policy.components[c];
    if (!entered[*plan.parent_subnet]) continue;
    for (const auto& path : plan.paths) {
      SubnetIndex from = *plan.parent_subnet;
      for (std::size_t i = 0; i < path.vertices.size(); ++i) {
        const SubnetIndex v = path.vertices[i];
        if (entered[v]) {
          from = v;
          continue;
        }
        const Edge* edge = net.edge(from, v);
        if (!entered[from] || !edge || !(edge->firewall == path.firewalls[i]))
          fail(ErrorCategory::internal, "plan attacks subnet '" + net.subnet(v).id + "' from an unreachable vantage point");
        const auto& attack = path.attacks[i];
        if (!run.attack(attack.first_machine, *attack.first, attack.firewall)) break;
        entered[v] = true;
        static const Firewall open;
        for (const auto& r : attack.residual) run.attack(r.machine, *r.plan, open);
        from = v;
      }
    }
  }
  return run.total;
}

double execute_global_policy(const GlobalModel& global, const PolicyNode& policy, const TrueConfiguration& config) {
  const auto& model = global.model;
  StateId s = global.state_for_entries(config);
  double total = 0.0;
  const PolicyNode* node = &policy;
  std::size_t steps = 0;
  while (node && node->action != model.terminate()) {
    if (++steps > model.action_count()) fail(ErrorCategory::internal, "global policy repeats actions");
    total += model.reward(s, node->action);
    const auto& out = model.outcome(s, node->action);
    s = out.next;
    node = node->child(out.observation);
  }
  return total;
}

namespace {

std::vector<const MachineBelief*> scenario_beliefs(const Planner& planner, const Scenario& scenario) {
  std::vector<const MachineBelief*> beliefs;
  for (const auto& m : scenario.machines) beliefs.push_back(&planner.dynamics(m.id)->belief());
  return beliefs;
}

}  // namespace

SimulationReport simulate_attack_policy(const AttackPolicy& policy, const Planner& planner, const Scenario& scenario,
                                        std::size_t runs, std::uint64_t seed) {
  if (runs == 0) fail(ErrorCategory::invalid_input, "at least one simulation run is required");
  auto beliefs = scenario_beliefs(planner, scenario);
  std::vector<double> returns;
  returns.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    returns.push_back(execute_attack_policy(policy, planner, scenario, sample_configuration(beliefs, rng)));
  }
  return summarize(returns, seed);
}

PairedReport simulate_paired(const AttackPolicy& policy, const Planner& planner, const Scenario& scenario,
                             const GlobalModel& global, const PolicyNode& global_policy, std::size_t runs,
                             std::uint64_t seed) {
  if (runs == 0) fail(ErrorCategory::invalid_input, "at least one simulation run is required");
  auto beliefs = scenario_beliefs(planner, scenario);
  std::vector<double> a, b;
  a.reserve(runs);
  b.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    auto config = sample_configuration(beliefs, rng);
    a.push_back(execute_attack_policy(policy, planner, scenario, config));
    b.push_back(execute_global_policy(global, global_policy, config));
  }
  return {summarize(a, seed), summarize(b, seed)};
}

}  // namespace attackplan
