#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "attackplan/machine_pomdp.hpp"
#include "attackplan/network.hpp"
#include "attackplan/pomdp.hpp"
#include "attackplan/scenario.hpp"

namespace attackplan {

struct GlobalModelOptions {
  std::size_t max_states = 100'000;
};

/// Whole-network POMDP. States are tuples of machine-local states plus the
/// terminal state 0; actions are "machine:action" pairs and terminate.
struct GlobalModel {
  PomdpModel model;
  std::vector<std::string> machines;
  std::vector<std::shared_ptr<const MachineDynamics>> dynamics;  // aligned with machines
  std::map<std::vector<std::size_t>, StateId> state_of;          // local-state tuple -> state
  std::vector<std::vector<std::size_t>> tuple_of;                // state -> tuple (empty for terminal)

  /// State whose machines sit in the given belief entries.
  StateId state_for_entries(const std::vector<std::size_t>& entries) const;
};

struct MachineInput {
  std::string id;
  double value = 0.0;
  MachineBelief belief;
};

/// An action on machine m is usable when m's subnet already holds a
/// controlled machine, or an edge from the root or from a subnet with a
/// controlled machine leads to it through a firewall that lets its port
/// pass. Unusable actions are cost-bearing no-ops observing "blocked". Success pays
/// the machine's value. Throws `Error(capacity)` past `max_states`.
GlobalModel create_global_pomdp(const LogicalNetwork& net, const std::vector<MachineInput>& machines,
                                const ActionLibrary& library, const GlobalModelOptions& options = {});

GlobalModel create_global_pomdp(const Scenario& scenario, const GlobalModelOptions& options = {});

/// Subnets holding a controlled machine in `tuple`, plus the root.
std::vector<bool> controlled_subnets(const GlobalModel& g, const LogicalNetwork& net,
                                     const std::vector<std::size_t>& tuple);

}  // namespace attackplan
