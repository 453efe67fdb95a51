#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace attackplan {

using StateId = std::size_t;
using ActionId = std::size_t;
using ObservationId = std::size_t;

/// Sparse distribution over states, sorted by state id.
class Belief {
 public:
  Belief() = default;
  explicit Belief(std::vector<std::pair<StateId, double>> entries);

  static Belief point(StateId s) { return Belief({{s, 1.0}}); }

  const std::vector<std::pair<StateId, double>>& entries() const { return entries_; }
  double probability(StateId s) const;
  double total() const;
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::pair<StateId, double>> entries_;
};

struct ActionInfo {
  std::string name;
  double time_cost = 0.0;       // r_t(a) <= 0
  double detection_cost = 0.0;  // r_d(a) <= 0
};

/// Deterministic result of applying an action in a state.
struct Outcome {
  StateId next = 0;
  ObservationId observation = 0;
  double gain = 0.0;  // r_e(s, a, s') >= 0
};

/// Explicit finite POMDP with deterministic per-state outcomes.
///
/// r(s,a,s') = gain + time_cost(a) + detection_cost(a), except that the
/// terminate action and every action taken in the terminal state earn 0.
/// The outcome of (s, a) is stored per state-action pair; the observation is
/// therefore a function of (s, a), which covers O(s', a) for this model class.
class PomdpModel {
 public:
  PomdpModel(std::vector<std::string> states, std::vector<ActionInfo> actions,
             std::vector<std::string> observations, StateId terminal, ActionId terminate,
             std::vector<Outcome> outcomes, Belief initial);

  std::size_t state_count() const { return states_.size(); }
  std::size_t action_count() const { return actions_.size(); }
  std::size_t observation_count() const { return observations_.size(); }

  const std::string& state_name(StateId s) const { return states_.at(s); }
  const ActionInfo& action(ActionId a) const { return actions_.at(a); }
  const std::string& observation_name(ObservationId o) const { return observations_.at(o); }
  const std::vector<std::string>& states() const { return states_; }
  const std::vector<ActionInfo>& actions() const { return actions_; }
  const std::vector<std::string>& observations() const { return observations_; }

  StateId terminal() const { return terminal_; }
  ActionId terminate() const { return terminate_; }
  const Belief& initial_belief() const { return initial_; }

  const Outcome& outcome(StateId s, ActionId a) const { return outcomes_[s * actions_.size() + a]; }
  double reward(StateId s, ActionId a) const;

  std::optional<ActionId> find_action(std::string_view name) const;
  std::optional<ObservationId> find_observation(std::string_view name) const;
  std::optional<StateId> find_state(std::string_view name) const;

  /// Copy with the listed actions removed (terminate cannot be removed).
  PomdpModel without_actions(const std::vector<ActionId>& removed) const;
  PomdpModel with_initial_belief(Belief b) const;

  friend bool operator==(const PomdpModel&, const PomdpModel&);

 private:
  std::vector<std::string> states_;
  std::vector<ActionInfo> actions_;
  std::vector<std::string> observations_;
  StateId terminal_;
  ActionId terminate_;
  std::vector<Outcome> outcomes_;
  Belief initial_;
};

bool operator==(const Outcome& a, const Outcome& b);

/// Conditional plan. A node whose action is `terminate` is a leaf; a missing
/// child for an observation also ends the plan.
struct PolicyNode {
  ActionId action = 0;
  std::vector<std::pair<ObservationId, std::shared_ptr<const PolicyNode>>> children;

  const PolicyNode* child(ObservationId o) const;
};
using PolicyPtr = std::shared_ptr<const PolicyNode>;

PolicyPtr terminate_policy(const PomdpModel& model);

double observation_probability(const Belief& b, ActionId a, ObservationId o, const PomdpModel& model);

/// Bayes filter: b'(s') proportional to sum_s T(s,a,s') O(s',a,o) b(s).
/// Throws `Error(impossible_observation)` when Pr(o | b, a) = 0.
Belief belief_update(const Belief& b, ActionId a, ObservationId o, const PomdpModel& model);

struct SolveResult {
  double value = 0.0;
  PolicyPtr policy;
  std::size_t expanded = 0;  // distinct (belief, available-actions) nodes
};

/// Exact optimum over no-repeat, observation-contingent plans (undiscounted).
///
/// AND/OR search over the belief tree with memoisation on (belief,
/// available actions). Ties go to terminate, then to the lexicographically
/// smallest action name.
SolveResult solve_exact(const PomdpModel& model);

/// Same optimum by plain recursion over normalized beliefs: no memo, no
/// pruning. Refuses models with more than 7 actions.
double brute_force_value(const PomdpModel& model);

/// Exact expected total reward of `policy` from the initial belief.
double evaluate_policy(const PomdpModel& model, const PolicyNode& policy);

/// Every action appears at most once on each root-to-leaf path.
bool satisfies_no_repeat(const PolicyNode& policy);

std::size_t policy_depth(const PolicyNode& policy);

}  // namespace attackplan
