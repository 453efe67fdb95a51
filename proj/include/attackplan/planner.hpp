#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "attackplan/machine_pomdp.hpp"
#include "attackplan/network.hpp"
#include "attackplan/pomdp.hpp"
#include "attackplan/scenario.hpp"

namespace attackplan {

enum class TargetOrder {
  reward_desc,    // descending r(N) + pr(N), ties by subnet id
  lexicographic,  // subnet id only
};

struct PlannerOptions {
  std::size_t max_paths = 1'000'000;  // per Level-2 target
  bool merge_states = true;
  TargetOrder target_order = TargetOrder::reward_desc;
  MachineModelOptions model_options;
};

/// Solved single-machine attack. `model` is null when nothing was worth
/// solving (R = 0 or no usable action); the plan is then "terminate".
struct Level4Result {
  double value = 0.0;
  PolicyPtr policy;
  std::shared_ptr<const MachineModel> model;
};
using Level4Ptr = std::shared_ptr<const Level4Result>;

/// Memo of Level-4 solves keyed on (machine class, firewall, R rounded to 1e-9).
/// Machines with identical beliefs and action sets share a class.
class Level4Cache {
 public:
  struct Key {
    std::size_t machine_class;
    Firewall firewall;
    long long reward_nano;
    auto operator<=>(const Key& o) const {
      if (auto c = machine_class <=> o.machine_class; c != 0) return c;
      if (auto c = reward_nano <=> o.reward_nano; c != 0) return c;
      if (firewall < o.firewall) return std::strong_ordering::less;
      if (o.firewall < firewall) return std::strong_ordering::greater;
      return std::strong_ordering::equal;
    }
    bool operator==(const Key&) const = default;
  };

  Level4Ptr find(const Key& key);
  void insert(const Key& key, Level4Ptr result);
  void count_trivial() { ++trivial_; }

  std::size_t solves() const { return solves_; }
  std::size_t hits() const { return hits_; }
  std::size_t trivial() const { return trivial_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<Key, Level4Ptr> entries_;
  std::size_t solves_ = 0;
  std::size_t hits_ = 0;
  std::size_t trivial_ = 0;
};

struct VertexAttack {
  SubnetIndex subnet = 0;
  std::string first_machine;
  Firewall firewall;
  double reward = 0.0;  // augmented R of the first machine
  double value = 0.0;
  Level4Ptr first;
  struct Residual {
    std::string machine;
    Level4Ptr plan;  // through the empty firewall, R = r(m)
  };
  std::vector<Residual> residual;  // descending r(m), ties by id
};

struct PathPlan {
  SubnetIndex target = 0;
  std::vector<SubnetIndex> vertices;  // N_1 .. N_k
  std::vector<Firewall> firewalls;    // F_0 .. F_{k-1}
  double value = 0.0;
  std::vector<VertexAttack> attacks;  // aligned with vertices
};

struct ComponentPlan {
  std::size_t component = 0;
  std::optional<SubnetIndex> parent_subnet;
  double value = 0.0;
  std::vector<PathPlan> paths;  // execution order
};

/// Reward taken by a chosen path; the audit trail behind "each reward counts once".
struct RewardClaim {
  enum class Kind { machine, pivot } kind;
  std::string id;  // machine id or subnet id
  double amount;
  std::size_t component;
};

struct AttackPolicy {
  CleanedNetwork cleaned;
  std::vector<ComponentPlan> components;  // indexed like cleaned.tree.components
  std::vector<double> pivot_rewards;      // pr(N) after propagation, before claiming
  std::vector<RewardClaim> claims;
  double value = 0.0;
};

/// Four-level decomposition planner over a scenario. The scenario must
/// outlive the planner and any policy it returns.
class Planner {
 public:
  explicit Planner(const Scenario& scenario, PlannerOptions options = {});

  /// Level 1: processes components bottom-up and returns pr(*) with the plan.
  AttackPolicy plan();

  /// Levels 2-4 on the cleaned network's subnet indices, using the current
  /// (possibly already claimed) machine rewards and pivot rewards.
  double level2(std::size_t component, ComponentPlan* record = nullptr);
  double level3(SubnetIndex subnet, const Firewall& firewall, double pivot_reward, double path_reward,
                VertexAttack* record = nullptr);
  Level4Ptr level4(const std::string& machine, const Firewall& firewall, double reward);

  const CleanedNetwork& cleaned() const { return cleaned_; }
  const Level4Cache& cache() const { return cache_; }
  const PlannerOptions& options() const { return options_; }
  double pivot_reward(SubnetIndex subnet) const { return pr_.at(subnet); }
  double machine_reward(const std::string& machine) const { return reward_.at(machine); }
  std::size_t machine_class(const std::string& machine) const;
  std::shared_ptr<const MachineDynamics> dynamics(const std::string& machine) const;
  std::size_t paths_enumerated() const { return paths_enumerated_; }

 private:
  struct MachineData {
    std::size_t cls;
  };
  struct ClassData {
    std::shared_ptr<const MachineDynamics> dynamics;
  };

  double score_path(const std::vector<SubnetIndex>& vertices, const std::vector<Firewall>& firewalls,
                    PathPlan* record);
  std::vector<std::pair<std::vector<SubnetIndex>, std::vector<Firewall>>> simple_paths(std::size_t component,
                                                                                       SubnetIndex target);
  double subnet_reward(SubnetIndex subnet) const;

  const Scenario& scenario_;
  PlannerOptions options_;
  CleanedNetwork cleaned_;
  std::map<std::string, MachineData> machines_;
  std::vector<ClassData> classes_;
  std::map<std::string, double> reward_;
  std::vector<double> pr_;
  std::vector<double> pr_total_;
  std::vector<RewardClaim> claims_;
  Level4Cache cache_;
  std::size_t paths_enumerated_ = 0;
};

/// Stable-field planner report.
nlohmann::json planner_report(const AttackPolicy& policy, const Planner& planner);

std::string_view to_string(TargetOrder order);

}  // namespace attackplan
