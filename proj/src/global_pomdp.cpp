#include "attackplan/global_pomdp.hpp"

#include <deque>
#include <sstream>

#include "attackplan/error.hpp"

namespace attackplan {

StateId GlobalModel::state_for_entries(const std::vector<std::size_t>& entries) const {
  if (entries.size() != dynamics.size()) fail(ErrorCategory::internal, "configuration size mismatch");
  std::vector<std::size_t> tuple(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) tuple[i] = dynamics[i]->entry_state(entries[i]);
  auto it = state_of.find(tuple);
  if (it == state_of.end()) fail(ErrorCategory::internal, "configuration outside the global model");
  return it->second;
}

namespace {

std::vector<bool> controlled_from_tuple(const LogicalNetwork& net, const std::vector<SubnetIndex>& subnet_of,
                                        const std::vector<std::size_t>& tuple) {
  std::vector<bool> controlled(net.subnet_count(), false);
  controlled[net.root()] = true;
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    if (tuple[i] == MachineDynamics::kControlled) controlled[subnet_of[i]] = true;
  }
  return controlled;
}

bool usable(const LogicalNetwork& net, const std::vector<bool>& controlled, SubnetIndex target,
            const std::optional<int>& port) {
  if (controlled[target]) return true;
  for (const Edge* e : net.in_edges(target)) {
    if (controlled[e->from] && (!port || !e->firewall.blocks(*port))) return true;
  }
  return false;
}

}  // namespace

std::vector<bool> controlled_subnets(const GlobalModel& g, const LogicalNetwork& net,
                                     const std::vector<std::size_t>& tuple) {
  std::vector<SubnetIndex> subnet_of;
  for (const auto& m : g.machines) subnet_of.push_back(*net.subnet_of_machine(m));
  return controlled_from_tuple(net, subnet_of, tuple);
}

GlobalModel create_global_pomdp(const LogicalNetwork& net, const std::vector<MachineInput>& machines,
                                const ActionLibrary& library, const GlobalModelOptions& options) {
  const std::size_t n = machines.size();
  std::vector<std::shared_ptr<const MachineDynamics>> dynamics;
  std::vector<SubnetIndex> subnet_of;
  for (const auto& m : machines) {
    auto s = net.subnet_of_machine(m.id);
    if (!s) fail(ErrorCategory::invalid_input, "machine '" + m.id + "' is in no subnet");
    subnet_of.push_back(*s);
    dynamics.push_back(std::make_shared<const MachineDynamics>(library, m.belief));
  }

  // Refuse before enumerating when the initial support alone is too large.
  double support = 1.0;
  std::ostringstream sizes;
  for (std::size_t i = 0; i < n; ++i) {
    support *= static_cast<double>(machines[i].belief.entries.size());
    sizes << (i ? ", " : "") << machines[i].id << ':' << dynamics[i]->state_count() - 1;
  }
  auto too_big = [&](double count) {
    std::ostringstream msg;
    msg << "global model needs more than " << options.max_states << " states (" << count
        << " reached; local states per machine: " << sizes.str() << ")";
    fail(ErrorCategory::capacity, msg.str());
  };
  if (support + 1 > static_cast<double>(options.max_states)) too_big(support + 1);

  std::vector<ActionInfo> actions;
  std::vector<std::pair<std::size_t, std::size_t>> action_of;  // (machine, local action)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < dynamics[i]->actions().size(); ++a) {
      const auto& spec = dynamics[i]->actions()[a];
      actions.push_back({machines[i].id + ":" + spec.name, spec.time_cost, spec.detection_cost});
      action_of.emplace_back(i, a);
    }
  }
  const ActionId terminate = actions.size();
  actions.push_back({"terminate", 0.0, 0.0});
  const std::size_t A = actions.size();

  std::vector<std::string> observations{"none", "blocked"};
  std::map<std::string, ObservationId> obs_index{{"none", 0}, {"blocked", 1}};
  auto obs_id = [&](const std::string& name) {
    auto [it, inserted] = obs_index.emplace(name, observations.size());
    if (inserted) observations.push_back(name);
    return it->second;
  };

  GlobalModel g{PomdpModel({"terminal"}, {{"terminate", 0.0, 0.0}}, {"none"}, 0, 0, {{0, 0, 0.0}}, Belief::point(0)),
                {},
                dynamics,
                {},
                {{}}};
  for (const auto& m : machines) g.machines.push_back(m.id);

  std::vector<std::string> states{"terminal"};
  auto intern = [&](const std::vector<std::size_t>& tuple) {
    auto [it, inserted] = g.state_of.emplace(tuple, states.size());
    if (inserted) {
      if (states.size() + 1 > options.max_states) too_big(static_cast<double>(states.size() + 1));
      std::string name;
      for (std::size_t i = 0; i < n; ++i) name += (i ? ";" : "") + machines[i].id + "=" + dynamics[i]->state_name(tuple[i]);
      if (n == 0) name = "start";
      states.push_back(std::move(name));
      g.tuple_of.push_back(tuple);
    }
    return it->second;
  };

  // Initial support in mixed-radix order, first machine slowest.
  std::vector<std::pair<StateId, double>> b0;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    std::vector<std::size_t> tuple(n);
    double p = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      tuple[i] = dynamics[i]->entry_state(idx[i]);
      p *= machines[i].belief.entries[idx[i]].probability;
    }
    b0.emplace_back(intern(tuple), p);
    std::ptrdiff_t k = static_cast<std::ptrdiff_t>(n) - 1;
    while (k >= 0 && ++idx[k] == machines[k].belief.entries.size()) idx[k--] = 0;
    if (k < 0) break;
  }

  std::vector<Outcome> outcomes(A, Outcome{0, 0, 0.0});  // terminal row
  for (StateId s = 1; s < states.size(); ++s) {
    const auto tuple = g.tuple_of[s];
    auto controlled = controlled_from_tuple(net, subnet_of, tuple);
    for (ActionId a = 0; a < A; ++a) {
      if (a == terminate) {
        outcomes.push_back({0, 0, 0.0});
        continue;
      }
      auto [i, local_action] = action_of[a];
      const auto& spec = dynamics[i]->actions()[local_action];
      if (!usable(net, controlled, subnet_of[i], spec.port)) {
        outcomes.push_back({s, 1, 0.0});
        continue;
      }
      const auto& step = dynamics[i]->step(tuple[i], local_action);
      auto next = tuple;
      next[i] = step.next;
      StateId ns = intern(next);
      outcomes.push_back({ns, obs_id(step.observation), step.success ? machines[i].value : 0.0});
    }
  }

  g.model = PomdpModel(std::move(states), std::move(actions), std::move(observations), 0, terminate,
                       std::move(outcomes), Belief(std::move(b0)));
  return g;
}

GlobalModel create_global_pomdp(const Scenario& scenario, const GlobalModelOptions& options) {
  std::vector<MachineInput> inputs;
  for (const auto& m : scenario.machines) inputs.push_back({m.id, m.value, scenario.belief(m.id)});
  return create_global_pomdp(scenario.network, inputs, scenario.actions.library, options);
}

}  // namespace attackplan
