#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <json.hpp>

#include "attackplan/global_pomdp.hpp"
#include "attackplan/planner.hpp"
#include "attackplan/pomdp.hpp"

namespace attackplan {

struct SimulationReport {
  std::size_t runs = 0;
  double mean = 0.0;
  double stddev = 0.0;      // sample standard deviation
  double half_width = 0.0;  // 1.96 * stddev / sqrt(runs)
  std::uint64_t seed = 0;
};

SimulationReport summarize(const std::vector<double>& returns, std::uint64_t seed);
nlohmann::json to_json(const SimulationReport& report);

/// Independent stream for run `run` of a simulation seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t run);

/// Index drawn from the discrete distribution `weights` by inverse CDF.
std::size_t sample_index(const std::vector<double>& weights, std::mt19937_64& rng);

/// Samples a true state from b0 per run and follows the policy.
SimulationReport simulate_policy_mc(const PomdpModel& model, const PolicyNode& policy, std::size_t runs,
                                    std::uint64_t seed);

/// True configuration of every machine: one belief-entry index per machine,
/// in scenario machine order.
using TrueConfiguration = std::vector<std::size_t>;

TrueConfiguration sample_configuration(const std::vector<const MachineBelief*>& beliefs, std::mt19937_64& rng);

/// Runs a 4AL policy against true machine states: components root-down,
/// paths in order, each path abandoned when entering a subnet fails. Returns
/// the realised total reward (true machine values plus action costs).
/// Throws `Error(internal)` if the plan issues an action its vantage point
/// cannot reach.
double execute_attack_policy(const AttackPolicy& policy, const Planner& planner, const Scenario& scenario,
                             const TrueConfiguration& config);

double execute_global_policy(const GlobalModel& global, const PolicyNode& policy, const TrueConfiguration& config);

SimulationReport simulate_attack_policy(const AttackPolicy& policy, const Planner& planner, const Scenario& scenario,
                                        std::size_t runs, std::uint64_t seed);

struct PairedReport {
  SimulationReport foural;
  SimulationReport global;
};

/// Both policies face the same sampled configuration in every run.
PairedReport simulate_paired(const AttackPolicy& policy, const Planner& planner, const Scenario& scenario,
                             const GlobalModel& global, const PolicyNode& global_policy, std::size_t runs,
                             std::uint64_t seed);

}  // namespace attackplan
