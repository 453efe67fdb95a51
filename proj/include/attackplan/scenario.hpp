#pragma once

#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "attackplan/machine_pomdp.hpp"
#include "attackplan/network.hpp"
#include "attackplan/update_model.hpp"

namespace attackplan {

/// Named initial configuration I(m) that machines may reference.
struct MachineTemplate {
  std::string name;
  std::vector<ProgramVersion> programs;
};

/// Action library plus the template bank, as stored in an action template file.
struct ActionTemplates {
  ActionLibrary library;
  std::vector<MachineTemplate> templates;

  const MachineTemplate& find(std::string_view name) const;
};

struct MachineInfo {
  std::string id;
  double value = 0.0;  // r(m)
  std::optional<std::string> template_name;
};

struct Scenario {
  LogicalNetwork network;
  std::vector<MachineInfo> machines;  // network machine order
  SnapshotConfig snapshot;
  UpdateModel update_model;
  ActionTemplates actions;

  int days() const { return snapshot.days; }
  void set_days(int days);
  const MachineInfo& machine(std::string_view id) const;
  double value(std::string_view id) const { return machine(id).value; }
  MachineBelief belief(std::string_view machine) const;
  /// Throws unless every machine has a snapshot whose programs the
  /// library and update model both know.
  void validate() const;
};

LogicalNetwork network_from_json(const nlohmann::json& j);
nlohmann::json network_to_json(const LogicalNetwork& net);

UpdateModel update_model_from_json(const nlohmann::json& j);
nlohmann::json update_model_to_json(const UpdateModel& model);

ActionTemplates action_templates_from_json(const nlohmann::json& j);
nlohmann::json action_templates_to_json(const ActionTemplates& t);

/// Sections given as strings are file paths resolved against `base_dir`.
Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
/// Self-contained form with every section inlined.
nlohmann::json scenario_to_json(const Scenario& s);

Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace attackplan
