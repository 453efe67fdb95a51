#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "attackplan/error.hpp"
#include "attackplan/experiments.hpp"
#include "attackplan/global_pomdp.hpp"
#include "attackplan/planner.hpp"
#include "attackplan/pomdp_io.hpp"
#include "attackplan/scenario.hpp"
#include "attackplan/simulation.hpp"

using namespace attackplan;
using nlohmann::json;

namespace {

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) fail(ErrorCategory::invalid_input, "cannot write '" + out_path + "'");
  out << text;
}

int report_error(ErrorCategory category, const std::string& message) {
  json j = {{"error", std::string(to_string(category))}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return exit_code(category);
}

Scenario load(const std::string& path, CLI::Option* days_opt, int days) {
  auto s = load_scenario(path);
  if (days_opt->count()) s.set_days(days);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attack planning with single-machine POMDPs and four-level decomposition"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, dump_path, policy_kind = "4al", order = "reward_desc";
  std::uint64_t seed = 1;
  std::size_t runs = 2000, cap_states = 100'000, max_paths = 1'000'000;
  int days = 50;
  bool no_merge = false;

  auto add_days = [&](CLI::App* sub) { return sub->add_option("--days", days, "Days since the last pentest (T)"); };

  auto* plan = app.add_subcommand("plan", "Run the 4AL planner on a scenario and print its report");
  plan->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  auto* plan_days = add_days(plan);
  plan->add_option("--out", out_path, "Report file (default: stdout)");
  plan->add_option("--target-order", order, "Level-2 target order")
      ->check(CLI::IsMember({"reward_desc", "lexicographic"}));
  plan->add_option("--max-paths", max_paths, "Simple-path cap per Level-2 target");
  plan->add_flag("--no-merge", no_merge, "Solve Level-4 models without merging indistinguishable states");

  auto* global = app.add_subcommand("solve-global", "Solve the whole-network POMDP exactly");
  global->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  auto* global_days = add_days(global);
  global->add_option("--cap-states", cap_states, "Refuse models with more states")->capture_default_str();
  global->add_option("--out", out_path, "Result file (default: stdout)");
  global->add_option("--dump", dump_path, "Also write the model in the flat POMDP format");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo evaluation of a planned policy");
  simulate->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  auto* sim_days = add_days(simulate);
  simulate->add_option("--policy", policy_kind, "Policy to simulate")->check(CLI::IsMember({"4al", "global"}));
  simulate->add_option("--runs", runs, "Simulation runs")->capture_default_str();
  simulate->add_option("--seed", seed, "Random seed")->capture_default_str();
  simulate->add_option("--cap-states", cap_states, "State cap for the global policy")->capture_default_str();
  simulate->add_option("--out", out_path, "Report file (default: stdout)");

  ScenarioParams params;
  auto* gen = app.add_subcommand("gen-scenario", "Generate a three-zone test scenario");
  gen->add_option("--machines", params.machines, "|M|")->capture_default_str();
  gen->add_option("--exploits", params.exploits, "|E|")->capture_default_str();
  gen->add_option("--days", params.days, "T")->capture_default_str();
  gen->add_option("--seed", params.seed, "Random seed")->capture_default_str();
  gen->add_option("--fanout", params.user_fanout, "User tree fan-out")->capture_default_str();
  gen->add_option("--per-subnet", params.machines_per_user_subnet, "Machines per User subnet")->capture_default_str();
  bool no_triangle = false;
  gen->add_flag("--no-triangle", no_triangle, "Drop the direct edge from the root into Sensitive");
  gen->add_option("--out", out_path, "Scenario file (default: stdout)");

  auto* experiment = app.add_subcommand("experiment", "Quality and scaling experiments (CSV)");
  experiment->require_subcommand(1);
  QualityGrid qgrid;
  auto* quality = experiment->add_subcommand("quality", "4AL vs global POMDP, paired simulations");
  quality->add_option("--exploits", qgrid.exploits, "Exploit counts")->delimiter(',');
  quality->add_option("--machines", qgrid.machines, "Machine counts")->delimiter(',');
  quality->add_option("--seeds", qgrid.seeds, "Scenario seeds")->delimiter(',');
  quality->add_option("--seed", qgrid.seeds, "Scenario seed");
  quality->add_option("--runs", qgrid.runs, "Simulation runs per cell")->capture_default_str();
  quality->add_option("--days", qgrid.days, "T")->capture_default_str();
  quality->add_option("--cap-states", qgrid.cap_states, "Global model state cap")->capture_default_str();
  quality->add_option("--out", out_path, "CSV file (default: stdout)");

  ScalingGrid sgrid;
  auto* scaling = experiment->add_subcommand("scaling", "4AL wall-clock against |M| and |E|");
  scaling->add_option("--exploits", sgrid.exploits, "Exploit counts")->delimiter(',');
  scaling->add_option("--machines", sgrid.machines, "Machine counts")->delimiter(',');
  scaling->add_option("--repeats", sgrid.repeats, "Timed repeats per cell (median kept)")->capture_default_str();
  scaling->add_option("--timeout", sgrid.timeout_seconds, "Per-run time limit in seconds")->capture_default_str();
  scaling->add_option("--days", sgrid.days, "T")->capture_default_str();
  scaling->add_option("--seed", sgrid.seed, "Scenario seed")->capture_default_str();
  scaling->add_option("--out", out_path, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(ErrorCategory::invalid_input, e.what());
  }

  try {
    if (plan->parsed()) {
      auto s = load(scenario_path, plan_days, days);
      PlannerOptions options;
      options.max_paths = max_paths;
      options.merge_states = !no_merge;
      options.target_order = order == "lexicographic" ? TargetOrder::lexicographic : TargetOrder::reward_desc;
      Planner planner(s, options);
      auto policy = planner.plan();
      emit(out_path, planner_report(policy, planner).dump(2) + "\n");
    } else if (global->parsed()) {
      auto s = load(scenario_path, global_days, days);
      auto g = create_global_pomdp(s, GlobalModelOptions{cap_states});
      if (!dump_path.empty()) emit(dump_path, dump_pomdp(g.model));
      auto solved = solve_exact(g.model);
      json j = {{"value", solved.value},
                {"states", g.model.state_count()},
                {"actions", g.model.action_count()},
                {"observations", g.model.observation_count()},
                {"expanded", solved.expanded},
                {"first_action", g.model.action(solved.policy->action).name}};
      emit(out_path, j.dump(2) + "\n");
    } else if (simulate->parsed()) {
      auto s = load(scenario_path, sim_days, days);
      json j;
      if (policy_kind == "global") {
        auto g = create_global_pomdp(s, GlobalModelOptions{cap_states});
        auto solved = solve_exact(g.model);
        j = to_json(simulate_policy_mc(g.model, *solved.policy, runs, seed));
        j["policy"] = "global";
        j["value"] = solved.value;
      } else {
        Planner planner(s);
        auto policy = planner.plan();
        j = to_json(simulate_attack_policy(policy, planner, s, runs, seed));
        j["policy"] = "4al";
        j["value"] = policy.value;
      }
      emit(out_path, j.dump(2) + "\n");
    } else if (gen->parsed()) {
      params.triangle = !no_triangle;
      auto s = generate_scenario(params);
      emit(out_path, scenario_to_json(s).dump(2) + "\n");
    } else if (quality->parsed()) {
      std::ostringstream csv;
      write_quality_csv(csv, run_quality_experiment(qgrid));
      emit(out_path, csv.str());
    } else if (scaling->parsed()) {
      std::ostringstream csv;
      write_scaling_csv(csv, run_scaling_experiment(sgrid));
      emit(out_path, csv.str());
    }
  } catch (const Error& e) {
    return report_error(e.category(), e.what());
  } catch (const std::exception& e) {
    return report_error(ErrorCategory::internal, e.what());
  }
  return 0;
}
