#include "attackplan/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "attackplan/error.hpp"
#include "attackplan/global_pomdp.hpp"
#include "attackplan/planner.hpp"
#include "attackplan/simulation.hpp"

namespace attackplan {

namespace {

constexpr std::size_t kGroups = 13;
constexpr int kBasePort = 1000;

std::size_t group_count(std::size_t exploits) { return std::min(exploits, kGroups); }

std::vector<std::size_t> group_members(std::size_t g, std::size_t exploits) {
  std::vector<std::size_t> out;
  for (std::size_t i = g; i < exploits; i += kGroups) out.push_back(i);
  return out;
}

bool gated(std::size_t i) { return i % 2 == 1; }
bool needs_os(std::size_t i) { return i % 3 == 2; }
bool crashes(std::size_t g) { return g % 4 == 3; }

int port_of(std::size_t g) { return kBasePort + static_cast<int>(g); }

Firewall ports_where(std::size_t groups, int residue) {
  Firewall f;
  for (std::size_t g = 0; g < groups; ++g) {
    if (static_cast<int>(g % 3) == residue) f.blocked_ports.insert(port_of(g));
  }
  return f;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void ScenarioParams::validate() const {
  if (machines < 1) fail(ErrorCategory::invalid_input, "scenario needs at least one machine");
  if (exploits < 1) fail(ErrorCategory::invalid_input, "scenario needs at least one exploit");
  if (days < 0) fail(ErrorCategory::invalid_input, "days must be non-negative");
  if (user_fanout < 1 || machines_per_user_subnet < 1 || templates < 1)
    fail(ErrorCategory::invalid_input, "user tree shape and template count must be positive");
}

ActionTemplates scenario_templates(std::size_t exploits, std::size_t templates) {
  if (exploits < 1 || templates < 1) fail(ErrorCategory::invalid_input, "need at least one exploit and template");
  ActionTemplates out;
  auto& lib = out.library;
  lib.scan_time_cost = -10.0;
  lib.os_detect_time_cost = -50.0;
  lib.os_detection = true;

  lib.programs.push_back({"DEP", std::nullopt, false, {{"off", {true, false, false, ""}}, {"on", {true, false, true, ""}}}});
  lib.programs.push_back(
      {"OS", std::nullopt, true, {{"xp_sp2", {true, false, false, "xp_sp2"}}, {"xp_sp3", {true, false, false, "xp_sp3"}}}});

  const std::size_t groups = group_count(exploits);
  for (std::size_t g = 0; g < groups; ++g) {
    ProgramSpec svc{"svc" + std::to_string(g), port_of(g), false, {}};
    svc.versions["absent"] = {false, false, false, ""};
    svc.versions["patched"] = {true, crashes(g), false, ""};
    const auto members = group_members(g, exploits);
    for (std::size_t j = 0; j < members.size(); ++j) svc.versions["v" + std::to_string(j)] = {true, false, false, ""};
    lib.programs.push_back(std::move(svc));
  }
  for (std::size_t i = 0; i < exploits; ++i) {
    const std::size_t g = i % kGroups;
    ExploitSpec e;
    e.name = "e" + std::to_string(i);
    e.program = "svc" + std::to_string(g);
    e.versions = {"v" + std::to_string(i / kGroups)};
    if (gated(i)) e.gates = {"DEP"};
    if (needs_os(i)) e.requires_os = "xp_sp2";
    e.crash = crashes(g) ? (i % 8 == 3 ? CrashScope::machine : CrashScope::program) : CrashScope::none;
    e.time_cost = -10.0;
    e.detection_cost = 0.0;
    lib.exploits.push_back(std::move(e));
  }

  for (std::size_t t = 0; t < templates; ++t) {
    const std::size_t g = t % groups;
    const auto members = group_members(g, exploits);
    MachineTemplate tm{"tpl" + std::to_string(t), {}};
    if (std::any_of(members.begin(), members.end(), needs_os)) tm.programs.push_back({"OS", "xp_sp2"});
    if (std::any_of(members.begin(), members.end(), gated)) tm.programs.push_back({"DEP", "off"});
    tm.programs.push_back({"svc" + std::to_string(g), "v0"});
    out.templates.push_back(std::move(tm));
  }
  lib.validate();
  return out;
}

UpdateModel scenario_update_model(const ActionTemplates& templates) {
  std::vector<ProgramChain> chains;
  std::vector<Dependency> deps;
  for (const auto& p : templates.library.programs) {
    ProgramChain c;
    c.program = p.program;
    if (p.program == "DEP") {
      c.versions = {"off", "on"};
      c.transition.resize(2, 2);
      c.transition << 0.99, 0.01, 0.0, 1.0;
    } else if (p.program == "OS") {
      c.versions = {"xp_sp2", "xp_sp3"};
      c.transition.resize(2, 2);
      c.transition << 0.995, 0.005, 0.0, 1.0;
    } else {
      // absent, patched, v0 .. v(k-1): each vulnerable version is upgraded
      // towards the next one, the last towards patched.
      std::size_t k = p.versions.size() - 2;
      c.versions = {"absent", "patched"};
      for (std::size_t j = 0; j < k; ++j) c.versions.push_back("v" + std::to_string(j));
      const auto n = static_cast<Eigen::Index>(c.versions.size());
      c.transition = Eigen::MatrixXd::Zero(n, n);
      c.transition(0, 0) = 1.0;
      c.transition(1, 0) = 0.001;
      c.transition(1, 1) = 0.999;
      for (Eigen::Index v = 2; v < n; ++v) {
        c.transition(v, 0) = 0.001;
        c.transition(v, v + 1 < n ? v + 1 : 1) = 0.005;
        c.transition(v, v) = 1.0 - 0.006;
      }
      // Under the newer service pack the oldest service version cannot run.
      bool with_os = std::any_of(templates.templates.begin(), templates.templates.end(), [&](const MachineTemplate& t) {
        bool has_os = false, has_p = false;
        for (const auto& pv : t.programs) {
          has_os = has_os || pv.program == "OS";
          has_p = has_p || pv.program == p.program;
        }
        return has_os && has_p;
      });
      if (with_os) {
        std::vector<std::string> allowed(c.versions.begin(), c.versions.end());
        allowed.erase(std::find(allowed.begin(), allowed.end(), "v0"));
        deps.push_back({p.program, {"OS"}, {{{"xp_sp3"}, allowed}}});
      }
    }
    chains.push_back(std::move(c));
  }
  return UpdateModel(std::move(chains), std::move(deps));
}

Scenario generate_scenario(const ScenarioParams& params) {
  params.validate();
  const std::size_t M = params.machines;
  auto templates = scenario_templates(params.exploits, params.templates);
  auto update = scenario_update_model(templates);
  const std::size_t groups = group_count(params.exploits);

  std::vector<std::string> exposed, sensitive, user;
  for (std::size_t i = 0; i < M; ++i) {
    std::string id = "m" + std::to_string(i);
    switch (i % 40) {
      case 0: exposed.push_back(id); break;
      case 1: sensitive.push_back(id); break;
      default: user.push_back(id); break;
    }
  }
  std::vector<Subnetwork> subnets{{"*", {}}, {"exposed", exposed}, {"sensitive", sensitive}};
  std::vector<EdgeSpec> edges{{"*", "exposed", {}}, {"exposed", "sensitive", ports_where(groups, 1)}};
  if (params.triangle) {
    // only the services Exposed cannot reach
    Firewall strict = ports_where(groups, 0);
    for (int p : ports_where(groups, 2).blocked_ports) strict.blocked_ports.insert(p);
    edges.push_back({"*", "sensitive", strict});
  }
  const std::size_t per = params.machines_per_user_subnet;
  const std::size_t user_subnets = (user.size() + per - 1) / per;
  for (std::size_t u = 0; u < user_subnets; ++u) {
    Subnetwork s{"user" + std::to_string(u), {}};
    for (std::size_t k = u * per; k < std::min(user.size(), (u + 1) * per); ++k) s.machines.push_back(user[k]);
    subnets.push_back(std::move(s));
    if (u == 0) {
      edges.push_back({"exposed", "user0", ports_where(groups, 2)});
    } else {
      edges.push_back({"user" + std::to_string((u - 1) / params.user_fanout), "user" + std::to_string(u), {}});
    }
  }
  LogicalNetwork net(std::move(subnets), edges, "*");

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, templates.templates.size() - 1);
  std::vector<MachineInfo> machines;
  SnapshotConfig snapshot;
  snapshot.days = params.days;
  std::map<std::string, MachineInfo> by_id;
  for (std::size_t i = 0; i < M; ++i) {
    std::string id = "m" + std::to_string(i);
    const auto& tm = templates.templates[pick(rng)];
    by_id[id] = {id, 0.0, tm.name};
    snapshot.machines.push_back({id, tm.programs});
  }
  if (!sensitive.empty()) {
    by_id[sensitive.front()].value = 9000.0;
  } else {
    by_id[exposed.front()].value = 9000.0;
  }
  if (user_subnets > 0) by_id[user[(user_subnets - 1) * per]].value = 5000.0;
  for (const auto& id : net.machine_ids()) machines.push_back(by_id.at(id));

  Scenario s{std::move(net), std::move(machines), std::move(snapshot), std::move(update), std::move(templates)};
  s.validate();
  return s;
}

std::vector<QualityCell> run_quality_experiment(const QualityGrid& grid) {
  std::vector<QualityCell> cells;
  for (std::size_t E : grid.exploits) {
    for (std::size_t M : grid.machines) {
      for (std::uint64_t seed : grid.seeds) {
        QualityCell cell;
        cell.exploits = E;
        cell.machines = M;
        cell.days = grid.days;
        cell.seed = seed;
        ScenarioParams params;
        params.machines = M;
        params.exploits = E;
        params.days = grid.days;
        params.seed = seed;
        auto scenario = generate_scenario(params);

        auto start = std::chrono::steady_clock::now();
        Planner planner(scenario);
        auto policy = planner.plan();
        cell.foural_seconds = seconds_since(start);
        cell.foural_value = policy.value;

        try {
          start = std::chrono::steady_clock::now();
          auto global = create_global_pomdp(scenario, GlobalModelOptions{grid.cap_states});
          cell.global_states = global.model.state_count();
          auto solved = solve_exact(global.model);
          cell.global_seconds = seconds_since(start);
          cell.global_value = solved.value;
          if (!(solved.value > 0.0)) {
            cell.status = "zero";
          } else {
            auto paired = simulate_paired(policy, planner, scenario, global, *solved.policy, grid.runs, seed);
            cell.foural_mean = paired.foural.mean;
            cell.global_mean = paired.global.mean;
            cell.foural_half_width = paired.foural.half_width;
            cell.global_half_width = paired.global.half_width;
            if (paired.global.mean > 0.0) {
              cell.loss_percent = 100.0 * (paired.global.mean - paired.foural.mean) / paired.global.mean;
              cell.status = "ok";
            } else {
              cell.status = "zero";
            }
          }
        } catch (const Error& e) {
          if (e.category() != ErrorCategory::capacity) throw;
          cell.status = "infeasible";
          cell.note = e.what();
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

void write_quality_csv(std::ostream& out, const std::vector<QualityCell>& cells) {
  out << "exploits,machines,days,seed,status,global_states,value_4al,value_global,mean_4al,mean_global,"
         "half_width_4al,half_width_global,loss_percent,seconds_4al,seconds_global\n";
  for (const auto& c : cells) {
    out << c.exploits << ',' << c.machines << ',' << c.days << ',' << c.seed << ',' << c.status << ','
        << c.global_states << ',' << real(c.foural_value) << ',' << real(c.global_value) << ','
        << real(c.foural_mean) << ',' << real(c.global_mean) << ',' << real(c.foural_half_width) << ','
        << real(c.global_half_width) << ',' << real(c.loss_percent) << ',' << real(c.foural_seconds) << ','
        << real(c.global_seconds) << '\n';
  }
}

QualitySummary summarize_quality(const std::vector<QualityCell>& cells) {
  QualitySummary s;
  double sum = 0.0;
  for (const auto& c : cells) {
    if (c.status != "ok") continue;
    ++s.feasible;
    sum += c.loss_percent;
    s.max_loss = s.feasible == 1 ? c.loss_percent : std::max(s.max_loss, c.loss_percent);
  }
  if (s.feasible) s.mean_loss = sum / static_cast<double>(s.feasible);
  return s;
}

std::vector<ScalingCell> run_scaling_experiment(const ScalingGrid& grid) {
  std::vector<ScalingCell> cells;
  for (std::size_t E : grid.exploits) {
    for (std::size_t M : grid.machines) {
      ScalingCell cell;
      cell.exploits = E;
      cell.machines = M;
      cell.days = grid.days;
      cell.status = "ok";
      ScenarioParams params;
      params.machines = M;
      params.exploits = E;
      params.days = grid.days;
      params.seed = grid.seed;
      auto scenario = generate_scenario(params);
      std::vector<double> times;
      for (std::size_t r = 0; r < std::max<std::size_t>(1, grid.repeats); ++r) {
        auto start = std::chrono::steady_clock::now();
        Planner planner(scenario);
        auto policy = planner.plan();
        times.push_back(seconds_since(start));
        cell.value = policy.value;
        cell.solves = planner.cache().solves();
        cell.cache_hits = planner.cache().hits();
        if (times.back() > grid.timeout_seconds) {
          cell.status = "timeout";
          break;
        }
      }
      std::sort(times.begin(), times.end());
      cell.seconds = times[times.size() / 2];
      cells.push_back(cell);
    }
  }
  return cells;
}

void write_scaling_csv(std::ostream& out, const std::vector<ScalingCell>& cells) {
  out << "exploits,machines,days,status,seconds,value_4al,solves,cache_hits\n";
  for (const auto& c : cells) {
    out << c.exploits << ',' << c.machines << ',' << c.days << ',' << c.status << ',' << real(c.seconds) << ','
        << real(c.value) << ',' << c.solves << ',' << c.cache_hits << '\n';
  }
}

double fit_scaling_exponent(const std::vector<ScalingCell>& cells, std::size_t exploits) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& c : cells) {
    if (c.exploits == exploits && c.status == "ok" && c.seconds > 0.0)
      pts.emplace_back(std::log(static_cast<double>(c.machines)), std::log(c.seconds));
  }
  if (pts.size() < 2) fail(ErrorCategory::invalid_input, "need at least two timed cells to fit an exponent");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return sxy / sxx;
}

}  // namespace attackplan
