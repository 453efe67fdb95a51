// One line per acceptance criterion: "AC<n> PASS|FAIL <details>".
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "attackplan/error.hpp"
#include "attackplan/experiments.hpp"
#include "attackplan/global_pomdp.hpp"
#include "attackplan/machine_pomdp.hpp"
#include "attackplan/planner.hpp"
#include "attackplan/simulation.hpp"
#include "support.hpp"

using namespace attackplan;
using namespace testsupport;

namespace {

int failures = 0;

void report(int n, bool pass, const std::string& details, double seconds) {
  char t[32];
  std::snprintf(t, sizeof t, "%.1fs", seconds);
  std::cout << "AC" << n << ' ' << (pass ? "PASS" : "FAIL") << ' ' << details << " [" << t << "]" << std::endl;
  if (!pass) ++failures;
}

void run(int n, const std::function<bool(std::ostringstream&)>& body) {
  auto start = std::chrono::steady_clock::now();
  std::ostringstream details;
  bool pass = false;
  try {
    pass = body(details);
  } catch (const std::exception& e) {
    details << "exception: " << e.what();
  }
  report(n, pass, details.str(), std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

PomdpModel running_model() {
  auto s = load_scenario(fixture("running_example/scenario.json"));
  return create_machine_pomdp({"m1", {}, 1000.0, s.belief("m1")}, s.actions.library);
}

}  // namespace

int main() {
  run(1, [](std::ostringstream& d) {
    std::mt19937_64 rng(20240601);
    double worst = 0;
    int n = 0;
    auto start = std::chrono::steady_clock::now();
    for (; n < 200; ++n) {
      auto m = random_pomdp(rng, 12, 5);
      worst = std::max(worst, std::abs(solve_exact(m).value - brute_force_value(m)));
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    d << n << " random models, max |exact - brute force| = " << worst;
    return worst <= 1e-9 && secs < 60.0;
  });

  run(2, [](std::ostringstream& d) {
    auto s = load_scenario(fixture("running_example/scenario.json"));
    auto b = s.belief("m1");
    auto dep = b.program_index("DEP");
    double on = 0;
    for (const auto& e : b.entries)
      if (b.version_names[dep][e.versions[dep]] == "on") on += e.probability;
    auto m = running_model();
    auto sol = solve_exact(m);
    const auto& first = m.action(sol.policy->action).name;
    const PolicyNode* open = sol.policy->child(*m.find_observation("open"));
    const PolicyNode* after_fail = nullptr;
    if (open && m.action(open->action).name == "exploit_SA") after_fail = open->child(*m.find_observation("failed"));
    bool terminates = after_fail && after_fail->action == m.terminate();
    // value of the same fixture enumerated independently by hand
    const double oracle = 230.565132959838;
    d << "DEP-on mass " << on << ", first action " << first << ", after exploit_SA failed: "
      << (terminates ? "terminate" : "not terminate") << ", value " << sol.value;
    return on > 0.70 && first == "scan_port_2967" && terminates && std::abs(sol.value - oracle) < 1e-6;
  });

  run(3, [](std::ostringstream& d) {
    std::mt19937_64 rng(7);
    int cases = 0, trees = 0, violations = 0, tree_mismatch = 0;
    double worst_gap = 0;
    for (int t = 0; t < 160 && cases < 120; ++t) {
      RandomScenarioOptions o;
      o.tree_singletons = t % 3 == 2;
      auto s = random_scenario(rng, o);
      auto g = small_global(s);
      if (!g) continue;
      Planner p(s);
      double v = p.plan().value;
      double exact = solve_exact(g->model).value;
      ++cases;
      if (v > exact + 1e-6) ++violations;
      worst_gap = std::max(worst_gap, v - exact);
      if (is_singleton_tree(p.cleaned())) {
        ++trees;
        if (std::abs(v - exact) > 1e-6) ++tree_mismatch;
      }
    }
    d << cases << " networks, " << violations << " with V(4AL) > V(global), max V(4AL)-V(global) = " << worst_gap
      << "; " << trees << " singleton trees, " << tree_mismatch << " unequal";
    return cases >= 50 && violations == 0 && trees > 0 && tree_mismatch == 0;
  });

  run(4, [](std::ostringstream& d) {
    QualityGrid q;
    q.exploits = {1, 2, 3, 4, 5, 6, 7};
    q.machines = {1, 2, 3, 4, 5, 6};
    q.seeds = {1, 2, 3};
    q.days = 50;
    q.runs = 2000;
    auto cells = run_quality_experiment(q);
    auto sum = summarize_quality(cells);
    d << sum.feasible << "/" << cells.size() << " feasible cells, mean loss " << sum.mean_loss << "%, max loss "
      << sum.max_loss << "%";
    return sum.feasible > 0 && sum.mean_loss <= 5.0 && sum.max_loss <= 20.0;
  });

  run(5, [](std::ostringstream& d) {
    ScalingGrid g;
    g.exploits = {20};
    g.machines = {40, 80, 120, 160};
    g.repeats = 5;
    g.timeout_seconds = 600;
    auto cells = run_scaling_experiment(g);
    bool all_ok = true;
    for (const auto& c : cells) {
      all_ok = all_ok && c.status == "ok";
      d << "M=" << c.machines << ":" << c.seconds << "s ";
    }
    double k = fit_scaling_exponent(cells, 20);
    d << "fitted exponent " << k;
    return all_ok && k < 3.0;
  });

  run(6, [](std::ostringstream& d) {
    std::mt19937_64 rng(606);
    int n = 0, mismatched = 0;
    for (; n < 100; ++n) {
      auto net = random_network(rng, 10);
      auto g = undirected(net);
      if (biconnected_components(net) != oracle_blocks(g) || cut_vertices(net) != oracle_cut_vertices(g)) ++mismatched;
    }
    d << n << " random graphs, " << mismatched << " mismatches";
    return mismatched == 0;
  });

  run(7, [](std::ostringstream& d) {
    auto m = running_model();
    auto sol = solve_exact(m);
    double exact = evaluate_policy(m, *sol.policy);
    int pass = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto r = simulate_policy_mc(m, *sol.policy, 2000, seed);
      if (std::abs(r.mean - exact) <= 3 * r.stddev / std::sqrt(2000.0)) ++pass;
    }
    d << pass << "/20 seeds within 3 sigma/sqrt(n) of " << exact;
    return pass >= 19;
  });

  run(8, [](std::ostringstream& d) {
    std::mt19937_64 rng(88);
    double worst = 0;
    bool identity = true;
    for (int t = 0; t < 200; ++t) {
      ProgramChain c;
      c.program = "P";
      std::size_t n = pick(rng, 1, 5);
      for (std::size_t i = 0; i < n; ++i) c.versions.push_back("v" + std::to_string(i));
      c.transition = Eigen::MatrixXd::Zero(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < n; ++j) sum += c.transition(i, j) = coin(rng, 0.3) ? 0.0 : uniform(rng, 0, 1);
        if (sum == 0) c.transition(i, i) = sum = 1;
        c.transition.row(i) /= sum;
      }
      Eigen::RowVectorXd start = Eigen::RowVectorXd::Zero(n);
      for (std::size_t i = 0; i < n; ++i) start(i) = uniform(rng, 0, 1);
      start /= start.sum();
      int a = static_cast<int>(pick(rng, 0, 60)), b = static_cast<int>(pick(rng, 0, 60));
      auto direct = propagate_chain(c, start, a + b);
      auto composed = propagate_chain(c, propagate_chain(c, start, a), b);
      worst = std::max(worst, (direct - composed).cwiseAbs().maxCoeff());
      identity = identity && propagate_chain(c, start, 0) == start;
      auto point = propagate_chain(c, c.versions[n - 1], 0);
      identity = identity && point(n - 1) == 1.0 && point.sum() == 1.0;
    }
    d << "200 random chains, max Chapman-Kolmogorov diff " << worst << ", T=0 identity "
      << (identity ? "exact" : "broken");
    return worst <= 1e-9 && identity;
  });

  return failures == 0 ? 0 : 1;
}
