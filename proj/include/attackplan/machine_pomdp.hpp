#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "attackplan/network.hpp"
#include "attackplan/pomdp.hpp"
#include "attackplan/update_model.hpp"

namespace attackplan {

struct VersionFlags {
  bool present = true;
  bool crash_on_fail = false;  // a failed exploit against this version crashes
  bool protective = false;     // gate programs: blocks the exploits they gate
  std::string os_class;        // OS programs only
};

struct ProgramSpec {
  std::string program;
  std::optional<int> port;  // listening port; open iff the version is present
  bool is_os = false;
  std::map<std::string, VersionFlags> versions;

  const VersionFlags& flags(std::string_view version) const;
};

enum class CrashScope { none, program, machine };

std::string_view to_string(CrashScope scope);

struct ExploitSpec {
  std::string name;
  std::string program;                   // target; the exploit uses its port
  std::vector<std::string> versions;     // target versions it succeeds against
  std::vector<std::string> gates;        // programs whose protective versions stop it
  std::optional<std::string> requires_os;  // OS class it needs
  CrashScope crash = CrashScope::none;   // effect of failing on a crash_on_fail version
  double time_cost = -10.0;
  double detection_cost = 0.0;
};

/// Program semantics and exploit catalogue shared by every machine.
struct ActionLibrary {
  std::vector<ProgramSpec> programs;
  std::vector<ExploitSpec> exploits;
  double scan_time_cost = -10.0;
  double scan_detection_cost = 0.0;
  double os_detect_time_cost = -50.0;
  double os_detect_detection_cost = 0.0;
  bool os_detection = true;

  const ProgramSpec* find_program(std::string_view program) const;
  /// Throws `Error(invalid_input)` on unknown references or inconsistent flags.
  void validate() const;
};

enum class ActionKind { port_scan, os_detect, exploit, terminate };

struct ActionSpec {
  ActionKind kind = ActionKind::terminate;
  std::string name;
  std::optional<int> port;
  double time_cost = 0.0;
  double detection_cost = 0.0;
  std::size_t exploit = 0;  // index into ActionLibrary::exploits for exploits
};

/// Actions applicable to a machine with this program inventory, terminate
/// excluded: exploits in library order, port scans by port, then os_detect.
std::vector<ActionSpec> actions_for_machine(const ActionLibrary& library, const MachineBelief& belief);

/// Ground-truth behaviour of one machine, shared by the single-machine
/// models, the global model and the simulators.
///
/// Local states: 0 = controlled, 1 = crashed (whole machine), then one state
/// per belief entry, then entries with crashed programs as they are reached.
class MachineDynamics {
 public:
  static constexpr std::size_t kControlled = 0;
  static constexpr std::size_t kCrashed = 1;

  struct Step {
    std::size_t next;
    std::string observation;
    bool success;
  };

  MachineDynamics(const ActionLibrary& library, MachineBelief belief);

  const MachineBelief& belief() const { return belief_; }
  const std::vector<ActionSpec>& actions() const { return actions_; }
  std::size_t state_count() const { return states_.size(); }
  std::string state_name(std::size_t local) const;
  std::size_t entry_state(std::size_t entry) const { return entry + 2; }
  bool crash_reachable() const { return crash_reachable_; }

  const Step& step(std::size_t local, std::size_t action) const { return table_[local * actions_.size() + action]; }

 private:
  struct Local {
    std::size_t entry;
    std::vector<bool> crashed;  // per belief program
    bool operator<(const Local& o) const {
      return entry != o.entry ? entry < o.entry : crashed < o.crashed;
    }
  };

  Step compute(std::size_t local, std::size_t action);
  std::size_t intern(const Local& l);

  const ActionLibrary* library_;
  MachineBelief belief_;
  std::vector<ActionSpec> actions_;
  std::vector<Local> states_;  // index 0/1 unused placeholders
  std::map<Local, std::size_t> index_;
  std::vector<Step> table_;
  bool crash_reachable_ = false;
};

struct MachinePomdpRequest {
  std::string machine;
  Firewall firewall;
  double reward = 0.0;
  MachineBelief belief;
};

struct MachineModelOptions {
  // Keep firewall-blocked actions as costly no-ops observing "none" instead
  // of removing them.
  bool blocked_as_noop = false;
};

/// A single-machine model plus the correspondence needed to run its
/// policies against the machine's true dynamics.
struct MachineModel {
  PomdpModel model;
  std::vector<std::optional<std::size_t>> dynamics_action;  // model action -> dynamics action
  std::vector<std::size_t> state_of_local;                  // local state -> model state
};

MachineModel build_machine_model(const MachinePomdpRequest& request, const MachineDynamics& dynamics,
                                 const MachineModelOptions& options = {});

PomdpModel create_machine_pomdp(const MachinePomdpRequest& request, const ActionLibrary& library,
                                const MachineModelOptions& options = {});

/// Bisimulation quotient: states with the same observation, gain and
/// successor class under every action collapse into one, belief mass summed.
/// The merged state keeps the lowest-index member's name with a "+k" suffix
/// counting absorbed states.
PomdpModel merge_indistinguishable_states(const PomdpModel& model);

}  // namespace attackplan
