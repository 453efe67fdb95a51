#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "attackplan/scenario.hpp"

namespace attackplan {

struct ScenarioParams {
  std::size_t machines = 40;  // |M|
  std::size_t exploits = 13;  // |E|
  int days = 50;              // T
  std::uint64_t seed = 1;
  std::size_t user_fanout = 4;
  std::size_t machines_per_user_subnet = 10;
  bool triangle = true;  // direct edge from the root into Sensitive
  std::size_t templates = 13;

  void validate() const;
};

/// Three-zone test network: the root reaches Exposed through an open edge
/// (and Sensitive directly, only on ports Exposed cannot use, when `triangle`
/// is set), Exposed reaches Sensitive and the root of a User subnet tree. Of
/// every 40 machines the first goes to Exposed, the second to Sensitive and
/// the rest to User. The first Sensitive machine is worth 9000 (the Exposed
/// machine when Sensitive is empty) and one machine of the last User leaf
/// subnet 5000. Each machine draws one of `templates` templates from the seed.
Scenario generate_scenario(const ScenarioParams& params);

/// Template bank used by generate_scenario (`exploits` exploits over
/// `templates` templates).
ActionTemplates scenario_templates(std::size_t exploits, std::size_t templates = 13);
UpdateModel scenario_update_model(const ActionTemplates& templates);

struct QualityGrid {
  std::vector<std::size_t> exploits{1, 3, 5, 7};
  std::vector<std::size_t> machines{1, 2, 3, 4, 5, 6};
  int days = 50;
  std::vector<std::uint64_t> seeds{1};
  std::size_t runs = 2000;
  std::size_t cap_states = 100'000;
};

struct QualityCell {
  std::size_t exploits = 0;
  std::size_t machines = 0;
  int days = 0;
  std::uint64_t seed = 0;
  std::string status;  // ok | infeasible | zero
  std::size_t global_states = 0;
  double foural_value = 0.0;
  double global_value = 0.0;
  double foural_mean = 0.0;
  double global_mean = 0.0;
  double foural_half_width = 0.0;
  double global_half_width = 0.0;
  double loss_percent = 0.0;  // (global - 4AL) / global, simulated, paired
  double foural_seconds = 0.0;
  double global_seconds = 0.0;
  std::string note;
};

std::vector<QualityCell> run_quality_experiment(const QualityGrid& grid);
void write_quality_csv(std::ostream& out, const std::vector<QualityCell>& cells);

struct QualitySummary {
  std::size_t feasible = 0;
  double mean_loss = 0.0;
  double max_loss = 0.0;
};
QualitySummary summarize_quality(const std::vector<QualityCell>& cells);

struct ScalingGrid {
  std::vector<std::size_t> exploits{20};
  std::vector<std::size_t> machines{40, 80, 120, 160};
  int days = 50;
  std::uint64_t seed = 1;
  std::size_t repeats = 3;
  double timeout_seconds = 600.0;
};

struct ScalingCell {
  std::size_t exploits = 0;
  std::size_t machines = 0;
  int days = 0;
  std::string status;  // ok | timeout
  double seconds = 0.0;  // median over repeats
  double value = 0.0;
  std::size_t solves = 0;
  std::size_t cache_hits = 0;
};

std::vector<ScalingCell> run_scaling_experiment(const ScalingGrid& grid);
void write_scaling_csv(std::ostream& out, const std::vector<ScalingCell>& cells);

/// Least-squares slope of log(seconds) against log(machines) over the ok
/// cells with the given exploit count.
double fit_scaling_exponent(const std::vector<ScalingCell>& cells, std::size_t exploits);

}  // namespace attackplan
