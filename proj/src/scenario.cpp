#include "attackplan/scenario.hpp"

#include <fstream>
#include <set>

#include "attackplan/error.hpp"

namespace attackplan {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  fail(ErrorCategory::invalid_input, path + ": " + msg);
}

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& field(const json& j, const std::string& path, const char* key) {
  if (!j.is_object()) bad(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(path, std::string("missing field '") + key + "'");
  return *it;
}

const json* optional_field(const json& j, const char* key) {
  auto it = j.find(key);
  return (it == j.end() || it->is_null()) ? nullptr : &*it;
}

std::string str(const json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  auto s = j.get<std::string>();
  if (s.empty()) bad(path, "must not be empty");
  return s;
}

double num(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) bad(path, "expected an integer");
  return j.get<int>();
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) bad(path, "expected true or false");
  return j.get<bool>();
}

const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array");
  return j;
}

std::vector<std::string> strings(const json& j, const std::string& path) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < array(j, path).size(); ++i) out.push_back(str(j[i], at(path, i)));
  return out;
}

template <typename F>
auto with_context(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.category(), path + ": " + e.what());
  }
}

std::vector<ProgramVersion> program_versions(const json& j, const std::string& path) {
  std::vector<ProgramVersion> out;
  for (std::size_t i = 0; i < array(j, path).size(); ++i) {
    auto p = at(path, i);
    out.push_back({str(field(j[i], p, "program"), at(p, "program")), str(field(j[i], p, "version"), at(p, "version"))});
  }
  return out;
}

json program_versions_to_json(const std::vector<ProgramVersion>& pvs) {
  json out = json::array();
  for (const auto& pv : pvs) out.push_back({{"program", pv.program}, {"version", pv.version}});
  return out;
}

json section(const json& j, const std::string& key, const std::filesystem::path& base_dir) {
  const auto& s = field(j, "", key.c_str());
  if (s.is_string()) {
    auto p = std::filesystem::path(s.get<std::string>());
    if (p.is_relative()) p = base_dir / p;
    return read_json_file(p);
  }
  return s;
}

}  // namespace

const MachineTemplate& ActionTemplates::find(std::string_view name) const {
  for (const auto& t : templates) {
    if (t.name == name) return t;
  }
  fail(ErrorCategory::invalid_input, "unknown machine template '" + std::string(name) + "'");
}

void Scenario::set_days(int days) {
  if (days < 0) fail(ErrorCategory::invalid_input, "days must be non-negative");
  snapshot.days = days;
}

const MachineInfo& Scenario::machine(std::string_view id) const {
  for (const auto& m : machines) {
    if (m.id == id) return m;
  }
  fail(ErrorCategory::invalid_input, "unknown machine '" + std::string(id) + "'");
}

MachineBelief Scenario::belief(std::string_view machine) const {
  return build_initial_belief(update_model, snapshot, machine);
}

void Scenario::validate() const {
  actions.library.validate();
  for (const auto& m : machines) {
    const auto& snap = snapshot.machine(m.id);
    for (const auto& pv : snap.programs) {
      if (!actions.library.find_program(pv.program))
        fail(ErrorCategory::invalid_input,
             "machine '" + m.id + "': program '" + pv.program + "' missing from the action library");
      const auto& spec = *actions.library.find_program(pv.program);
      for (const auto& v : update_model.chain(pv.program).versions) {
        if (!spec.versions.count(v))
          fail(ErrorCategory::invalid_input,
               "program '" + pv.program + "': version '" + v + "' has no flags in the action library");
      }
      update_model.chain(pv.program).version_index(pv.version);
    }
  }
}

LogicalNetwork network_from_json(const json& j) {
  const std::string path = "network";
  std::vector<Subnetwork> subnets;
  const auto& js = array(field(j, path, "subnets"), at(path, "subnets"));
  for (std::size_t i = 0; i < js.size(); ++i) {
    auto p = at(at(path, "subnets"), i);
    Subnetwork s;
    s.id = str(field(js[i], p, "id"), at(p, "id"));
    if (const auto* m = optional_field(js[i], "machines")) s.machines = strings(*m, at(p, "machines"));
    subnets.push_back(std::move(s));
  }
  std::vector<EdgeSpec> edges;
  if (const auto* je = optional_field(j, "edges")) {
    for (std::size_t i = 0; i < array(*je, at(path, "edges")).size(); ++i) {
      auto p = at(at(path, "edges"), i);
      const auto& e = (*je)[i];
      EdgeSpec spec{str(field(e, p, "from"), at(p, "from")), str(field(e, p, "to"), at(p, "to")), {}};
      if (const auto* ports = optional_field(e, "blocked_ports")) {
        for (std::size_t k = 0; k < array(*ports, at(p, "blocked_ports")).size(); ++k) {
          int port = integer((*ports)[k], at(at(p, "blocked_ports"), k));
          if (port <= 0) bad(at(at(p, "blocked_ports"), k), "port must be positive");
          spec.firewall.blocked_ports.insert(port);
        }
      }
      edges.push_back(std::move(spec));
    }
  }
  auto root = str(field(j, path, "root"), at(path, "root"));
  return with_context(path, [&] { return LogicalNetwork(std::move(subnets), edges, root); });
}

json network_to_json(const LogicalNetwork& net) {
  json subnets = json::array();
  for (const auto& s : net.subnets()) subnets.push_back({{"id", s.id}, {"machines", s.machines}});
  json edges = json::array();
  for (const auto& e : net.edge_specs()) {
    edges.push_back({{"from", e.from},
                     {"to", e.to},
                     {"blocked_ports", std::vector<int>(e.firewall.blocked_ports.begin(), e.firewall.blocked_ports.end())}});
  }
  return {{"root", net.subnet(net.root()).id}, {"subnets", subnets}, {"edges", edges}};
}

UpdateModel update_model_from_json(const json& j) {
  const std::string path = "update_model";
  std::vector<ProgramChain> chains;
  const auto& jc = array(field(j, path, "chains"), at(path, "chains"));
  for (std::size_t i = 0; i < jc.size(); ++i) {
    auto p = at(at(path, "chains"), i);
    ProgramChain c;
    c.program = str(field(jc[i], p, "program"), at(p, "program"));
    c.versions = strings(field(jc[i], p, "versions"), at(p, "versions"));
    const auto& rows = array(field(jc[i], p, "transition"), at(p, "transition"));
    const auto n = static_cast<Eigen::Index>(c.versions.size());
    if (static_cast<Eigen::Index>(rows.size()) != n) bad(at(p, "transition"), "needs one row per version");
    c.transition.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      auto rp = at(at(p, "transition"), static_cast<std::size_t>(r));
      const auto& row = array(rows[static_cast<std::size_t>(r)], rp);
      if (static_cast<Eigen::Index>(row.size()) != n) bad(rp, "needs one column per version");
      for (Eigen::Index col = 0; col < n; ++col)
        c.transition(r, col) = num(row[static_cast<std::size_t>(col)], at(rp, static_cast<std::size_t>(col)));
    }
    chains.push_back(std::move(c));
  }
  std::vector<Dependency> deps;
  if (const auto* jd = optional_field(j, "dependencies")) {
    for (std::size_t i = 0; i < array(*jd, at(path, "dependencies")).size(); ++i) {
      auto p = at(at(path, "dependencies"), i);
      const auto& d = (*jd)[i];
      Dependency dep;
      dep.program = str(field(d, p, "program"), at(p, "program"));
      dep.parents = strings(field(d, p, "parents"), at(p, "parents"));
      if (const auto* rules = optional_field(d, "compatible")) {
        for (std::size_t k = 0; k < array(*rules, at(p, "compatible")).size(); ++k) {
          auto rp = at(at(p, "compatible"), k);
          dep.rules.push_back({strings(field((*rules)[k], rp, "parents"), at(rp, "parents")),
                               strings(field((*rules)[k], rp, "versions"), at(rp, "versions"))});
        }
      }
      deps.push_back(std::move(dep));
    }
  }
  return with_context(path, [&] { return UpdateModel(std::move(chains), std::move(deps)); });
}

json update_model_to_json(const UpdateModel& model) {
  json chains = json::array();
  for (const auto& c : model.chains()) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < c.transition.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index col = 0; col < c.transition.cols(); ++col) row.push_back(c.transition(r, col));
      rows.push_back(row);
    }
    chains.push_back({{"program", c.program}, {"versions", c.versions}, {"transition", rows}});
  }
  json deps = json::array();
  for (const auto& d : model.dependencies()) {
    json rules = json::array();
    for (const auto& r : d.rules) rules.push_back({{"parents", r.parent_versions}, {"versions", r.allowed}});
    deps.push_back({{"program", d.program}, {"parents", d.parents}, {"compatible", rules}});
  }
  return {{"chains", chains}, {"dependencies", deps}};
}

ActionTemplates action_templates_from_json(const json& j) {
  const std::string path = "actions";
  ActionTemplates out;
  auto& lib = out.library;
  auto real_or = [&](const char* key, double fallback) {
    const auto* v = optional_field(j, key);
    return v ? num(*v, at(path, key)) : fallback;
  };
  lib.scan_time_cost = real_or("scan_time_cost", lib.scan_time_cost);
  lib.scan_detection_cost = real_or("scan_detection_cost", lib.scan_detection_cost);
  lib.os_detect_time_cost = real_or("os_detect_time_cost", lib.os_detect_time_cost);
  lib.os_detect_detection_cost = real_or("os_detect_detection_cost", lib.os_detect_detection_cost);
  if (const auto* v = optional_field(j, "os_detection")) lib.os_detection = boolean(*v, at(path, "os_detection"));

  const auto& jp = array(field(j, path, "programs"), at(path, "programs"));
  for (std::size_t i = 0; i < jp.size(); ++i) {
    auto p = at(at(path, "programs"), i);
    ProgramSpec spec;
    spec.program = str(field(jp[i], p, "program"), at(p, "program"));
    if (const auto* port = optional_field(jp[i], "port")) spec.port = integer(*port, at(p, "port"));
    if (const auto* os = optional_field(jp[i], "os")) spec.is_os = boolean(*os, at(p, "os"));
    const auto& jv = field(jp[i], p, "versions");
    if (!jv.is_object()) bad(at(p, "versions"), "expected an object keyed by version");
    for (const auto& [name, flags] : jv.items()) {
      auto vp = at(at(p, "versions"), name);
      if (!flags.is_object()) bad(vp, "expected an object");
      VersionFlags f;
      if (const auto* v = optional_field(flags, "present")) f.present = boolean(*v, at(vp, "present"));
      if (const auto* v = optional_field(flags, "crash_on_fail")) f.crash_on_fail = boolean(*v, at(vp, "crash_on_fail"));
      if (const auto* v = optional_field(flags, "protective")) f.protective = boolean(*v, at(vp, "protective"));
      if (const auto* v = optional_field(flags, "os_class")) f.os_class = str(*v, at(vp, "os_class"));
      spec.versions.emplace(name, std::move(f));
    }
    lib.programs.push_back(std::move(spec));
  }

  if (const auto* je = optional_field(j, "exploits")) {
    for (std::size_t i = 0; i < array(*je, at(path, "exploits")).size(); ++i) {
      auto p = at(at(path, "exploits"), i);
      const auto& e = (*je)[i];
      ExploitSpec x;
      x.name = str(field(e, p, "name"), at(p, "name"));
      x.program = str(field(e, p, "program"), at(p, "program"));
      x.versions = strings(field(e, p, "versions"), at(p, "versions"));
      if (const auto* g = optional_field(e, "gates")) x.gates = strings(*g, at(p, "gates"));
      if (const auto* os = optional_field(e, "requires_os")) x.requires_os = str(*os, at(p, "requires_os"));
      if (const auto* c = optional_field(e, "crash")) {
        auto scope = str(*c, at(p, "crash"));
        if (scope == "none") x.crash = CrashScope::none;
        else if (scope == "program") x.crash = CrashScope::program;
        else if (scope == "machine") x.crash = CrashScope::machine;
        else bad(at(p, "crash"), "expected none, program or machine");
      }
      if (const auto* v = optional_field(e, "time_cost")) x.time_cost = num(*v, at(p, "time_cost"));
      if (const auto* v = optional_field(e, "detection_cost")) x.detection_cost = num(*v, at(p, "detection_cost"));
      lib.exploits.push_back(std::move(x));
    }
  }

  if (const auto* jt = optional_field(j, "templates")) {
    std::set<std::string> names;
    for (std::size_t i = 0; i < array(*jt, at(path, "templates")).size(); ++i) {
      auto p = at(at(path, "templates"), i);
      MachineTemplate t;
      t.name = str(field((*jt)[i], p, "name"), at(p, "name"));
      if (!names.insert(t.name).second) bad(at(p, "name"), "duplicate template '" + t.name + "'");
      t.programs = program_versions(field((*jt)[i], p, "programs"), at(p, "programs"));
      out.templates.push_back(std::move(t));
    }
  }
  with_context(path, [&] {
    lib.validate();
    return 0;
  });
  return out;
}

json action_templates_to_json(const ActionTemplates& t) {
  const auto& lib = t.library;
  json programs = json::array();
  for (const auto& p : lib.programs) {
    json versions = json::object();
    for (const auto& [name, f] : p.versions) {
      json flags = {{"present", f.present}, {"crash_on_fail", f.crash_on_fail}, {"protective", f.protective}};
      if (!f.os_class.empty()) flags["os_class"] = f.os_class;
      versions[name] = flags;
    }
    json jp = {{"program", p.program}, {"os", p.is_os}, {"versions", versions}};
    jp["port"] = p.port ? json(*p.port) : json(nullptr);
    programs.push_back(jp);
  }
  json exploits = json::array();
  for (const auto& e : lib.exploits) {
    json je = {{"name", e.name},
               {"program", e.program},
               {"versions", e.versions},
               {"gates", e.gates},
               {"crash", std::string(to_string(e.crash))},
               {"time_cost", e.time_cost},
               {"detection_cost", e.detection_cost}};
    je["requires_os"] = e.requires_os ? json(*e.requires_os) : json(nullptr);
    exploits.push_back(je);
  }
  json templates = json::array();
  for (const auto& tm : t.templates)
    templates.push_back({{"name", tm.name}, {"programs", program_versions_to_json(tm.programs)}});
  return {{"scan_time_cost", lib.scan_time_cost},
          {"scan_detection_cost", lib.scan_detection_cost},
          {"os_detect_time_cost", lib.os_detect_time_cost},
          {"os_detect_detection_cost", lib.os_detect_detection_cost},
          {"os_detection", lib.os_detection},
          {"programs", programs},
          {"exploits", exploits},
          {"templates", templates}};
}

Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) bad("scenario", "expected an object");
  int days = integer(field(j, "", "days"), "days");
  if (days < 0) bad("days", "must be non-negative");

  auto network = network_from_json(section(j, "network", base_dir));
  auto update = update_model_from_json(section(j, "update_model", base_dir));
  auto actions = action_templates_from_json(section(j, "actions", base_dir));

  std::map<std::string, MachineInfo> infos;
  SnapshotConfig snapshot;
  snapshot.days = days;
  const auto& jm = array(field(j, "", "machines"), "machines");
  for (std::size_t i = 0; i < jm.size(); ++i) {
    auto p = at("machines", i);
    MachineInfo info;
    info.id = str(field(jm[i], p, "id"), at(p, "id"));
    if (const auto* v = optional_field(jm[i], "value")) info.value = num(*v, at(p, "value"));
    if (!(info.value >= 0.0)) bad(at(p, "value"), "must be non-negative");
    MachineSnapshot snap{info.id, {}};
    if (const auto* t = optional_field(jm[i], "template")) {
      info.template_name = str(*t, at(p, "template"));
      snap.programs = with_context(at(p, "template"), [&] { return actions.find(*info.template_name).programs; });
    } else {
      snap.programs = program_versions(field(jm[i], p, "programs"), at(p, "programs"));
    }
    if (!network.subnet_of_machine(info.id)) bad(at(p, "id"), "machine '" + info.id + "' is in no subnet");
    if (!infos.emplace(info.id, info).second) bad(at(p, "id"), "duplicate machine '" + info.id + "'");
    snapshot.machines.push_back(std::move(snap));
  }
  std::vector<MachineInfo> machines;
  for (const auto& id : network.machine_ids()) {
    auto it = infos.find(id);
    if (it == infos.end()) bad("machines", "no entry for machine '" + id + "'");
    machines.push_back(it->second);
  }
  Scenario s{std::move(network), std::move(machines), std::move(snapshot), std::move(update), std::move(actions)};
  s.validate();
  return s;
}

json scenario_to_json(const Scenario& s) {
  json machines = json::array();
  for (const auto& m : s.machines) {
    json jm = {{"id", m.id}, {"value", m.value}};
    if (m.template_name) {
      jm["template"] = *m.template_name;
    } else {
      jm["programs"] = program_versions_to_json(s.snapshot.machine(m.id).programs);
    }
    machines.push_back(jm);
  }
  return {{"days", s.days()},
          {"network", network_to_json(s.network)},
          {"machines", machines},
          {"update_model", update_model_to_json(s.update_model)},
          {"actions", action_templates_to_json(s.actions)}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::invalid_input, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCategory::invalid_input, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::invalid_input, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

Scenario load_scenario(const std::filesystem::path& path) {
  auto j = read_json_file(path);
  return scenario_from_json(j, path.parent_path());
}

}  // namespace attackplan
