#include "attackplan/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <unordered_map>

#include "attackplan/error.hpp"

namespace attackplan {

namespace {
constexpr double kBeliefTolerance = 1e-9;
constexpr double kPruneMass = 1e-12;

void merge_sorted(std::vector<std::pair<StateId, double>>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (out > 0 && entries[out - 1].first == entries[i].first) {
      entries[out - 1].second += entries[i].second;
    } else {
      entries[out++] = entries[i];
    }
  }
  entries.resize(out);
}
}  // namespace

Belief::Belief(std::vector<std::pair<StateId, double>> entries) : entries_(std::move(entries)) {
  merge_sorted(entries_);
  std::erase_if(entries_, [](const auto& e) { return e.second <= 0.0; });
}

double Belief::probability(StateId s) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), s,
                             [](const auto& e, StateId v) { return e.first < v; });
  return (it != entries_.end() && it->first == s) ? it->second : 0.0;
}

double Belief::total() const {
  double t = 0.0;
  for (const auto& e : entries_) t += e.second;
  return t;
}

bool operator==(const Outcome& a, const Outcome& b) {
  return a.next == b.next && a.observation == b.observation && a.gain == b.gain;
}

PomdpModel::PomdpModel(std::vector<std::string> states, std::vector<ActionInfo> actions,
                       std::vector<std::string> observations, StateId terminal, ActionId terminate,
                       std::vector<Outcome> outcomes, Belief initial)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      observations_(std::move(observations)),
      terminal_(terminal),
      terminate_(terminate),
      outcomes_(std::move(outcomes)),
      initial_(std::move(initial)) {
  const auto S = states_.size();
  const auto A = actions_.size();
  if (S == 0 || A == 0 || observations_.empty())
    fail(ErrorCategory::model, "POMDP needs at least one state, action and observation");
  if (terminal_ >= S) fail(ErrorCategory::model, "terminal state out of range");
  if (terminate_ >= A) fail(ErrorCategory::model, "terminate action out of range");
  if (outcomes_.size() != S * A) fail(ErrorCategory::model, "outcome table must have |S|*|A| entries");

  auto check_unique = [](const std::vector<std::string>& names, const char* what) {
    std::set<std::string> seen;
    for (const auto& n : names) {
      if (n.empty()) fail(ErrorCategory::model, std::string("empty ") + what + " name");
      if (!seen.insert(n).second) fail(ErrorCategory::model, std::string("duplicate ") + what + " '" + n + "'");
    }
  };
  check_unique(states_, "state");
  check_unique(observations_, "observation");
  std::vector<std::string> action_names;
  for (const auto& a : actions_) action_names.push_back(a.name);
  check_unique(action_names, "action");

  for (ActionId a = 0; a < A; ++a) {
    const auto& info = actions_[a];
    if (!(info.time_cost <= 0.0) || !(info.detection_cost <= 0.0) || !std::isfinite(info.time_cost) ||
        !std::isfinite(info.detection_cost))
      fail(ErrorCategory::model, "action '" + info.name + "' must have non-positive finite costs");
    if (a == terminate_ && (info.time_cost != 0.0 || info.detection_cost != 0.0))
      fail(ErrorCategory::model, "terminate must be free");
  }
  for (StateId s = 0; s < S; ++s) {
    for (ActionId a = 0; a < A; ++a) {
      const auto& o = outcome(s, a);
      if (o.next >= S || o.observation >= observations_.size())
        fail(ErrorCategory::model, "outcome of (" + states_[s] + ", " + actions_[a].name + ") out of range");
      if (!(o.gain >= 0.0) || !std::isfinite(o.gain))
        fail(ErrorCategory::model, "negative or non-finite gain on (" + states_[s] + ", " + actions_[a].name + ")");
      if (a == terminate_ && o.next != terminal_)
        fail(ErrorCategory::model, "terminate must lead to the terminal state from '" + states_[s] + "'");
      if (s == terminal_ && (o.next != terminal_ || o.gain != 0.0))
        fail(ErrorCategory::model, "terminal state must be absorbing with zero reward");
    }
  }
  for (const auto& [s, p] : initial_.entries()) {
    if (s >= S) fail(ErrorCategory::model, "initial belief references an unknown state");
    if (!(p >= 0.0)) fail(ErrorCategory::model, "initial belief has a negative probability");
  }
  if (std::abs(initial_.total() - 1.0) > kBeliefTolerance)
    fail(ErrorCategory::model, "initial belief must sum to 1");
}

double PomdpModel::reward(StateId s, ActionId a) const {
  if (s == terminal_ || a == terminate_) return 0.0;
  const auto& info = actions_[a];
  return outcome(s, a).gain + info.time_cost + info.detection_cost;
}

std::optional<ActionId> PomdpModel::find_action(std::string_view name) const {
  for (ActionId a = 0; a < actions_.size(); ++a) {
    if (actions_[a].name == name) return a;
  }
  return std::nullopt;
}

std::optional<ObservationId> PomdpModel::find_observation(std::string_view name) const {
  for (ObservationId o = 0; o < observations_.size(); ++o) {
    if (observations_[o] == name) return o;
  }
  return std::nullopt;
}

std::optional<StateId> PomdpModel::find_state(std::string_view name) const {
  for (StateId s = 0; s < states_.size(); ++s) {
    if (states_[s] == name) return s;
  }
  return std::nullopt;
}

PomdpModel PomdpModel::without_actions(const std::vector<ActionId>& removed) const {
  std::vector<ActionId> keep;
  for (ActionId a = 0; a < actions_.size(); ++a) {
    bool drop = std::find(removed.begin(), removed.end(), a) != removed.end();
    if (drop && a == terminate_) fail(ErrorCategory::model, "terminate cannot be removed");
    if (!drop) keep.push_back(a);
  }
  std::vector<ActionInfo> actions;
  ActionId new_terminate = 0;
  for (ActionId a : keep) {
    if (a == terminate_) new_terminate = actions.size();
    actions.push_back(actions_[a]);
  }
  std::vector<Outcome> outcomes;
  outcomes.reserve(states_.size() * keep.size());
  for (StateId s = 0; s < states_.size(); ++s) {
    for (ActionId a : keep) outcomes.push_back(outcome(s, a));
  }
  return PomdpModel(states_, std::move(actions), observations_, terminal_, new_terminate,
                    std::move(outcomes), initial_);
}

PomdpModel PomdpModel::with_initial_belief(Belief b) const {
  return PomdpModel(states_, actions_, observations_, terminal_, terminate_, outcomes_, std::move(b));
}

bool operator==(const PomdpModel& a, const PomdpModel& b) {
  if (a.states_ != b.states_ || a.observations_ != b.observations_ || a.terminal_ != b.terminal_ ||
      a.terminate_ != b.terminate_ || a.outcomes_ != b.outcomes_ ||
      a.initial_.entries() != b.initial_.entries() || a.actions_.size() != b.actions_.size())
    return false;
  for (std::size_t i = 0; i < a.actions_.size(); ++i) {
    const auto& x = a.actions_[i];
    const auto& y = b.actions_[i];
    if (x.name != y.name || x.time_cost != y.time_cost || x.detection_cost != y.detection_cost) return false;
  }
  return true;
}

const PolicyNode* PolicyNode::child(ObservationId o) const {
  for (const auto& [obs, node] : children) {
    if (obs == o) return node.get();
  }
  return nullptr;
}

PolicyPtr terminate_policy(const PomdpModel& model) {
  auto node = std::make_shared<PolicyNode>();
  node->action = model.terminate();
  return node;
}

double observation_probability(const Belief& b, ActionId a, ObservationId o, const PomdpModel& model) {
  double p = 0.0;
  for (const auto& [s, w] : b.entries()) {
    if (model.outcome(s, a).observation == o) p += w;
  }
  double total = b.total();
  return total > 0.0 ? p / total : 0.0;
}

Belief belief_update(const Belief& b, ActionId a, ObservationId o, const PomdpModel& model) {
  std::vector<std::pair<StateId, double>> next;
  double mass = 0.0;
  for (const auto& [s, w] : b.entries()) {
    const auto& out = model.outcome(s, a);
    if (out.observation != o) continue;
    next.emplace_back(out.next, w);
    mass += w;
  }
  if (mass <= 0.0)
    fail(ErrorCategory::impossible_observation, "observation '" + model.observation_name(o) +
                                                    "' has zero probability after '" + model.action(a).name + "'");
  for (auto& e : next) e.second /= mass;
  return Belief(std::move(next));
}

namespace {

using Mass = std::vector<std::pair<StateId, double>>;
using Mask = std::vector<std::uint64_t>;

bool has(const Mask& m, ActionId a) { return (m[a / 64] >> (a % 64)) & 1u; }
void set(Mask& m, ActionId a, bool on) {
  if (on) {
    m[a / 64] |= (std::uint64_t{1} << (a % 64));
  } else {
    m[a / 64] &= ~(std::uint64_t{1} << (a % 64));
  }
}

struct NodeKey {
  Mask mask;
  Mass belief;
  bool operator==(const NodeKey&) const = default;
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ull;
    auto mix = [&h](std::uint64_t v) { h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2); };
    for (auto w : k.mask) mix(w);
    for (const auto& [s, p] : k.belief) {
      mix(s);
      mix(std::hash<double>{}(p));
    }
    return h;
  }
};

bool improves(double candidate, double incumbent) {
  double scale = std::max({1.0, std::abs(candidate), std::abs(incumbent)});
  return candidate > incumbent + 1e-12 * scale;
}

// Values are kept unnormalized: V(mass) = Pr(reaching the node) * V(belief).
class ExactSolver {
 public:
  explicit ExactSolver(const PomdpModel& model) : model_(model), leaf_(terminate_policy(model)) {
    for (ActionId a = 0; a < model.action_count(); ++a) {
      if (a != model.terminate()) order_.push_back(a);
    }
    std::sort(order_.begin(), order_.end(), [&](ActionId x, ActionId y) {
      return model.action(x).name < model.action(y).name;
    });
  }

  SolveResult run() {
    Mass root;
    for (const auto& [s, p] : model_.initial_belief().entries()) {
      if (p > kPruneMass) root.emplace_back(s, p);
    }
    Mask mask((model_.action_count() + 63) / 64, 0);
    for (ActionId a : order_) set(mask, a, true);
    auto [value, policy] = search(root, mask);
    return SolveResult{value, policy, memo_.size()};
  }

 private:
  struct Group {
    ObservationId observation;
    Mass mass;
  };

  std::pair<double, PolicyPtr> search(const Mass& belief, Mask& mask) {
    NodeKey key{mask, belief};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    double best = 0.0;
    PolicyPtr best_policy = leaf_;
    std::vector<Group> groups;
    for (ActionId a : order_) {
      if (!has(mask, a)) continue;
      groups.clear();
      double q = 0.0;
      bool inert = true;
      for (const auto& [s, w] : belief) {
        const auto& out = model_.outcome(s, a);
        q += w * model_.reward(s, a);
        if (out.next != s || out.gain != 0.0) inert = false;
        auto g = std::find_if(groups.begin(), groups.end(),
                              [&](const Group& x) { return x.observation == out.observation; });
        if (g == groups.end()) {
          groups.push_back({out.observation, {}});
          g = groups.end() - 1;
        }
        g->mass.emplace_back(out.next, w);
      }
      // An action that changes nothing and reveals nothing is dominated by
      // skipping it: its cost is non-positive and the action set only shrinks.
      if (inert && groups.size() == 1) continue;

      std::sort(groups.begin(), groups.end(),
                [](const Group& x, const Group& y) { return x.observation < y.observation; });
      set(mask, a, false);
      std::vector<std::pair<ObservationId, PolicyPtr>> children;
      for (auto& g : groups) {
        merge_sorted(g.mass);
        auto [v, child] = search(g.mass, mask);
        q += v;
        children.emplace_back(g.observation, std::move(child));
      }
      set(mask, a, true);

      if (improves(q, best)) {
        best = q;
        auto node = std::make_shared<PolicyNode>();
        node->action = a;
        node->children = std::move(children);
        best_policy = std::move(node);
      }
    }
    auto result = std::make_pair(best, best_policy);
    memo_.emplace(std::move(key), result);
    return result;
  }

  const PomdpModel& model_;
  PolicyPtr leaf_;
  std::vector<ActionId> order_;
  std::unordered_map<NodeKey, std::pair<double, PolicyPtr>, NodeKeyHash> memo_;
};

double brute_force(const PomdpModel& model, const Belief& b, std::vector<bool>& available) {
  double best = 0.0;
  for (ActionId a = 0; a < model.action_count(); ++a) {
    if (a == model.terminate() || !available[a]) continue;
    double q = 0.0;
    std::set<ObservationId> observations;
    for (const auto& [s, w] : b.entries()) {
      q += w * model.reward(s, a);
      observations.insert(model.outcome(s, a).observation);
    }
    available[a] = false;
    for (ObservationId o : observations) {
      double p = observation_probability(b, a, o, model);
      q += p * brute_force(model, belief_update(b, a, o, model), available);
    }
    available[a] = true;
    best = std::max(best, q);
  }
  return best;
}

}  // namespace

SolveResult solve_exact(const PomdpModel& model) {
  ExactSolver solver(model);
  return solver.run();
}

double brute_force_value(const PomdpModel& model) {
  if (model.action_count() > 7)
    fail(ErrorCategory::capacity, "brute-force oracle limited to 7 actions, model has " +
                                      std::to_string(model.action_count()));
  std::vector<bool> available(model.action_count(), true);
  Belief b0(model.initial_belief().entries());
  return brute_force(model, b0, available);
}

double evaluate_policy(const PomdpModel& model, const PolicyNode& policy) {
  double total = 0.0;
  for (const auto& [s0, p] : model.initial_belief().entries()) {
    StateId s = s0;
    double ret = 0.0;
    const PolicyNode* node = &policy;
    while (node && node->action != model.terminate()) {
      const auto& out = model.outcome(s, node->action);
      ret += model.reward(s, node->action);
      s = out.next;
      node = node->child(out.observation);
    }
    total += p * ret;
  }
  return total;
}

bool satisfies_no_repeat(const PolicyNode& policy) {
  std::vector<ActionId> path;
  std::function<bool(const PolicyNode&)> walk = [&](const PolicyNode& n) {
    if (std::find(path.begin(), path.end(), n.action) != path.end()) return false;
    path.push_back(n.action);
    bool ok = true;
    for (const auto& [o, c] : n.children) {
      if (c && !walk(*c)) {
        ok = false;
        break;
      }
    }
    path.pop_back();
    return ok;
  };
  return walk(policy);
}

std::size_t policy_depth(const PolicyNode& policy) {
  std::size_t deepest = 0;
  for (const auto& [o, c] : policy.children) {
    if (c) deepest = std::max(deepest, policy_depth(*c));
  }
  return deepest + 1;
}

}  // namespace attackplan
