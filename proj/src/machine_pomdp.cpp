#include "attackplan/machine_pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <tuple>

#include "attackplan/error.hpp"

namespace attackplan {

const VersionFlags& ProgramSpec::flags(std::string_view version) const {
  auto it = versions.find(std::string(version));
  if (it == versions.end())
    fail(ErrorCategory::invalid_input,
         "program '" + program + "' has no flags for version '" + std::string(version) + "'");
  return it->second;
}

std::string_view to_string(CrashScope scope) {
  switch (scope) {
    case CrashScope::none: return "none";
    case CrashScope::program: return "program";
    case CrashScope::machine: return "machine";
  }
  return "none";
}

const ProgramSpec* ActionLibrary::find_program(std::string_view program) const {
  for (const auto& p : programs) {
    if (p.program == program) return &p;
  }
  return nullptr;
}

void ActionLibrary::validate() const {
  std::set<std::string> names;
  for (const auto& p : programs) {
    if (!names.insert(p.program).second)
      fail(ErrorCategory::invalid_input, "program '" + p.program + "' defined twice");
    if (p.port && *p.port <= 0) fail(ErrorCategory::invalid_input, "program '" + p.program + "': bad port");
    if (p.versions.empty()) fail(ErrorCategory::invalid_input, "program '" + p.program + "' has no versions");
    for (const auto& [v, f] : p.versions) {
      if (p.is_os && f.os_class.empty())
        fail(ErrorCategory::invalid_input, "OS program '" + p.program + "' version '" + v + "' lacks an OS class");
    }
  }
  auto check_costs = [](double t, double d, const std::string& what) {
    if (!(t <= 0.0) || !(d <= 0.0) || !std::isfinite(t) || !std::isfinite(d))
      fail(ErrorCategory::invalid_input, what + ": costs must be non-positive");
  };
  check_costs(scan_time_cost, scan_detection_cost, "port scan");
  check_costs(os_detect_time_cost, os_detect_detection_cost, "os_detect");
  std::set<std::string> exploit_names;
  for (const auto& e : exploits) {
    if (!exploit_names.insert(e.name).second)
      fail(ErrorCategory::invalid_input, "exploit '" + e.name + "' defined twice");
    const auto* target = find_program(e.program);
    if (!target) fail(ErrorCategory::model, "exploit '" + e.name + "' targets unknown program '" + e.program + "'");
    if (!target->port) fail(ErrorCategory::model, "exploit '" + e.name + "' targets a program without a port");
    for (const auto& v : e.versions) target->flags(v);
    for (const auto& g : e.gates) {
      if (!find_program(g)) fail(ErrorCategory::model, "exploit '" + e.name + "' gated by unknown program '" + g + "'");
    }
    check_costs(e.time_cost, e.detection_cost, "exploit '" + e.name + "'");
  }
  std::set<int> ports;
  for (const auto& p : programs) {
    if (p.port && !ports.insert(*p.port).second)
      fail(ErrorCategory::invalid_input, "port " + std::to_string(*p.port) + " used by two programs");
  }
}

std::vector<ActionSpec> actions_for_machine(const ActionLibrary& library, const MachineBelief& belief) {
  auto installed = [&](const std::string& p) {
    return std::find(belief.programs.begin(), belief.programs.end(), p) != belief.programs.end();
  };
  std::vector<ActionSpec> out;
  for (std::size_t i = 0; i < library.exploits.size(); ++i) {
    const auto& e = library.exploits[i];
    if (!installed(e.program)) continue;
    const auto* target = library.find_program(e.program);
    if (!target) fail(ErrorCategory::model, "exploit '" + e.name + "' targets unknown program '" + e.program + "'");
    ActionSpec a;
    a.kind = ActionKind::exploit;
    a.name = "exploit_" + e.name;
    a.port = target->port;
    a.time_cost = e.time_cost;
    a.detection_cost = e.detection_cost;
    a.exploit = i;
    out.push_back(std::move(a));
  }
  std::vector<int> ports;
  bool has_os = false;
  for (const auto& p : belief.programs) {
    const auto* spec = library.find_program(p);
    if (!spec) fail(ErrorCategory::model, "machine runs program '" + p + "' unknown to the action library");
    if (spec->port) ports.push_back(*spec->port);
    has_os = has_os || spec->is_os;
  }
  std::sort(ports.begin(), ports.end());
  for (int port : ports) {
    ActionSpec a;
    a.kind = ActionKind::port_scan;
    a.name = "scan_port_" + std::to_string(port);
    a.port = port;
    a.time_cost = library.scan_time_cost;
    a.detection_cost = library.scan_detection_cost;
    out.push_back(std::move(a));
  }
  if (library.os_detection && has_os) {
    ActionSpec a;
    a.kind = ActionKind::os_detect;
    a.name = "os_detect";
    a.time_cost = library.os_detect_time_cost;
    a.detection_cost = library.os_detect_detection_cost;
    out.push_back(std::move(a));
  }
  return out;
}

MachineDynamics::MachineDynamics(const ActionLibrary& library, MachineBelief belief)
    : library_(&library), belief_(std::move(belief)) {
  actions_ = actions_for_machine(library, belief_);
  states_.resize(2);
  for (std::size_t e = 0; e < belief_.entries.size(); ++e)
    intern(Local{e, std::vector<bool>(belief_.programs.size(), false)});
  for (std::size_t s = 0; s < states_.size(); ++s) {
    for (std::size_t a = 0; a < actions_.size(); ++a) {
      auto st = compute(s, a);
      if (st.next == kCrashed && s != kCrashed) crash_reachable_ = true;
      table_.push_back(std::move(st));
    }
  }
}

std::size_t MachineDynamics::intern(const Local& l) {
  auto [it, inserted] = index_.emplace(l, states_.size());
  if (inserted) states_.push_back(l);
  return it->second;
}

std::string MachineDynamics::state_name(std::size_t local) const {
  if (local == kControlled) return "controlled";
  if (local == kCrashed) return "crashed";
  const auto& l = states_.at(local);
  std::string name = belief_.describe(belief_.entries[l.entry]);
  for (std::size_t p = 0; p < l.crashed.size(); ++p) {
    if (l.crashed[p]) name += "!" + belief_.programs[p];
  }
  return name;
}

MachineDynamics::Step MachineDynamics::compute(std::size_t local, std::size_t action) {
  if (local == kControlled) return {local, "controlled", false};
  if (local == kCrashed) return {local, "down", false};
  const Local l = states_[local];
  const auto& entry = belief_.entries[l.entry];
  const auto& act = actions_[action];

  auto version_of = [&](std::size_t p) -> const std::string& { return belief_.version_names[p][entry.versions[p]]; };
  auto program_pos = [&](std::string_view program) -> std::optional<std::size_t> {
    for (std::size_t p = 0; p < belief_.programs.size(); ++p) {
      if (belief_.programs[p] == program) return p;
    }
    return std::nullopt;
  };
  auto flags_of = [&](std::size_t p) -> const VersionFlags& {
    return library_->find_program(belief_.programs[p])->flags(version_of(p));
  };

  switch (act.kind) {
    case ActionKind::port_scan: {
      for (std::size_t p = 0; p < belief_.programs.size(); ++p) {
        const auto* spec = library_->find_program(belief_.programs[p]);
        if (spec->port == act.port && flags_of(p).present && !l.crashed[p]) return {local, "open", false};
      }
      return {local, "closed", false};
    }
    case ActionKind::os_detect: {
      for (std::size_t p = 0; p < belief_.programs.size(); ++p) {
        if (library_->find_program(belief_.programs[p])->is_os) return {local, "os:" + flags_of(p).os_class, false};
      }
      return {local, "os:unknown", false};
    }
    case ActionKind::exploit: {
      const auto& ex = library_->exploits[act.exploit];
      const std::size_t target = *program_pos(ex.program);
      if (l.crashed[target]) return {local, "down", false};
      const auto& tf = flags_of(target);
      bool works = tf.present &&
                   std::find(ex.versions.begin(), ex.versions.end(), version_of(target)) != ex.versions.end();
      for (const auto& g : ex.gates) {
        auto gp = program_pos(g);
        if (gp && flags_of(*gp).protective) works = false;
      }
      if (ex.requires_os) {
        bool os_ok = false;
        for (std::size_t p = 0; p < belief_.programs.size(); ++p) {
          if (library_->find_program(belief_.programs[p])->is_os && flags_of(p).os_class == *ex.requires_os)
            os_ok = true;
        }
        works = works && os_ok;
      }
      if (works) return {kControlled, "succeeded", true};
      if (tf.crash_on_fail && ex.crash == CrashScope::machine) return {kCrashed, "crashed", false};
      if (tf.crash_on_fail && ex.crash == CrashScope::program) {
        Local next = l;
        next.crashed[target] = true;
        return {intern(next), "crashed", false};
      }
      return {local, "failed", false};
    }
    case ActionKind::terminate:
      break;
  }
  fail(ErrorCategory::internal, "terminate has no machine dynamics");
}

MachineModel build_machine_model(const MachinePomdpRequest& request, const MachineDynamics& dynamics,
                                 const MachineModelOptions& options) {
  if (!(request.reward >= 0.0) || !std::isfinite(request.reward))
    fail(ErrorCategory::invalid_input, "machine '" + request.machine + "': break-in reward must be >= 0");

  constexpr auto npos = std::numeric_limits<std::size_t>::max();
  std::vector<std::string> states{"terminal"};
  std::vector<std::size_t> state_of_local(dynamics.state_count(), npos);
  for (std::size_t l = 0; l < dynamics.state_count(); ++l) {
    if (l == MachineDynamics::kCrashed && !dynamics.crash_reachable()) continue;
    state_of_local[l] = states.size();
    states.push_back(dynamics.state_name(l));
  }

  std::vector<ActionInfo> actions;
  std::vector<std::optional<std::size_t>> dyn_action;
  std::vector<bool> blocked;
  for (std::size_t a = 0; a < dynamics.actions().size(); ++a) {
    const auto& spec = dynamics.actions()[a];
    bool is_blocked = spec.port && request.firewall.blocks(*spec.port);
    if (is_blocked && !options.blocked_as_noop) continue;
    actions.push_back({spec.name, spec.time_cost, spec.detection_cost});
    dyn_action.push_back(is_blocked ? std::nullopt : std::optional<std::size_t>(a));
    blocked.push_back(is_blocked);
  }
  const ActionId terminate = actions.size();
  actions.push_back({"terminate", 0.0, 0.0});
  dyn_action.push_back(std::nullopt);
  blocked.push_back(false);

  std::vector<std::string> observations{"none"};
  auto obs_id = [&](const std::string& name) {
    for (std::size_t i = 0; i < observations.size(); ++i) {
      if (observations[i] == name) return i;
    }
    observations.push_back(name);
    return observations.size() - 1;
  };

  std::vector<Outcome> outcomes;
  outcomes.reserve(states.size() * actions.size());
  std::vector<std::size_t> local_of_state(states.size(), npos);
  for (std::size_t l = 0; l < state_of_local.size(); ++l) {
    if (state_of_local[l] != npos) local_of_state[state_of_local[l]] = l;
  }
  for (StateId s = 0; s < states.size(); ++s) {
    for (ActionId a = 0; a < actions.size(); ++a) {
      if (s == 0 || a == terminate) {
        outcomes.push_back({0, 0, 0.0});
      } else if (blocked[a]) {
        outcomes.push_back({s, 0, 0.0});
      } else {
        const auto& st = dynamics.step(local_of_state[s], *dyn_action[a]);
        outcomes.push_back({state_of_local[st.next], obs_id(st.observation), st.success ? request.reward : 0.0});
      }
    }
  }

  std::vector<std::pair<StateId, double>> b0;
  const auto& entries = dynamics.belief().entries;
  for (std::size_t e = 0; e < entries.size(); ++e)
    b0.emplace_back(state_of_local[dynamics.entry_state(e)], entries[e].probability);

  return MachineModel{PomdpModel(std::move(states), std::move(actions), std::move(observations), 0, terminate,
                                 std::move(outcomes), Belief(std::move(b0))),
                      std::move(dyn_action), std::move(state_of_local)};
}

PomdpModel create_machine_pomdp(const MachinePomdpRequest& request, const ActionLibrary& library,
                                const MachineModelOptions& options) {
  MachineDynamics dynamics(library, request.belief);
  return build_machine_model(request, dynamics, options).model;
}

PomdpModel merge_indistinguishable_states(const PomdpModel& model) {
  const std::size_t S = model.state_count();
  const std::size_t A = model.action_count();
  std::vector<std::size_t> cls(S, 1);
  cls[model.terminal()] = 0;
  std::size_t classes = S > 1 ? 2 : 1;

  using Signature = std::vector<std::tuple<std::size_t, ObservationId, double>>;
  while (true) {
    std::map<std::pair<std::size_t, Signature>, std::size_t> ids;
    std::vector<std::size_t> next(S);
    for (StateId s = 0; s < S; ++s) {
      Signature sig;
      sig.reserve(A);
      for (ActionId a = 0; a < A; ++a) {
        const auto& o = model.outcome(s, a);
        sig.emplace_back(cls[o.next], o.observation, o.gain);
      }
      auto key = std::make_pair(cls[s], std::move(sig));
      auto it = ids.find(key);
      if (it == ids.end()) it = ids.emplace(std::move(key), ids.size()).first;
      next[s] = it->second;
    }
    bool stable = ids.size() == classes;
    classes = ids.size();
    cls = std::move(next);
    if (stable) break;
  }

  // Renumber classes by their lowest member.
  std::vector<std::size_t> order(classes, S);
  std::vector<std::size_t> members(classes, 0);
  for (StateId s = 0; s < S; ++s) {
    order[cls[s]] = std::min(order[cls[s]], s);
    ++members[cls[s]];
  }
  std::vector<std::size_t> reps(order.begin(), order.end());
  std::sort(reps.begin(), reps.end());
  std::vector<std::size_t> new_id(S);
  for (StateId s = 0; s < S; ++s)
    new_id[s] = static_cast<std::size_t>(std::lower_bound(reps.begin(), reps.end(), order[cls[s]]) - reps.begin());

  std::vector<std::string> states;
  for (std::size_t rep : reps) {
    std::size_t k = members[cls[rep]] - 1;
    states.push_back(k ? model.state_name(rep) + "+" + std::to_string(k) : model.state_name(rep));
  }
  std::vector<Outcome> outcomes;
  outcomes.reserve(reps.size() * A);
  for (std::size_t rep : reps) {
    for (ActionId a = 0; a < A; ++a) {
      const auto& o = model.outcome(rep, a);
      outcomes.push_back({new_id[o.next], o.observation, o.gain});
    }
  }
  std::vector<std::pair<StateId, double>> b0;
  for (const auto& [s, p] : model.initial_belief().entries()) b0.emplace_back(new_id[s], p);
  return PomdpModel(std::move(states), model.actions(), model.observations(), new_id[model.terminal()],
                    model.terminate(), std::move(outcomes), Belief(std::move(b0)));
}

}  // namespace attackplan
