#include <doctest.h>

#include <set>

#include "attackplan/error.hpp"
#include "attackplan/global_pomdp.hpp"
#include "attackplan/planner.hpp"
#include "support.hpp"

using namespace attackplan;
using namespace testsupport;

namespace {

double machine_value(const Scenario& s, const std::string& m, const Firewall& f, double R) {
  return solve_exact(create_machine_pomdp({m, f, R, s.belief(m)}, s.actions.library)).value;
}

}  // namespace

TEST_CASE("network with only the root is worth nothing") {
  auto s = workstation_scenario({{"*", {}}}, {}, {});
  Planner p(s);
  auto policy = p.plan();
  CHECK(policy.value == 0.0);
  CHECK(policy.components.size() == 1);
}

TEST_CASE("single machine reduces to its Level-4 model") {
  auto s = workstation_scenario({{"*", {}}, {"lan", {"m1"}}}, {{"*", "lan", {}}}, {{"m1", 1000.0}});
  Planner p(s);
  auto policy = p.plan();
  CHECK(policy.value == doctest::Approx(machine_value(s, "m1", {}, 1000.0)).epsilon(1e-12));
  CHECK(policy.value == doctest::Approx(230.565132959838).epsilon(1e-9));
  REQUIRE(policy.components[1].paths.size() == 1);
  const auto& attack = policy.components[1].paths[0].attacks[0];
  CHECK(attack.first_machine == "m1");
  CHECK(attack.first->model->model.action(attack.first->policy->action).name == "scan_port_2967");

  // merging does not change the answer
  PlannerOptions o;
  o.merge_states = false;
  Planner raw(s, o);
  CHECK(raw.plan().value == doctest::Approx(policy.value).epsilon(1e-12));
}

TEST_CASE("firewall in front of the only machine") {
  auto s = workstation_scenario({{"*", {}}, {"lan", {"m1"}}}, {{"*", "lan", {{2967, 6668}}}}, {{"m1", 1000.0}});
  Planner p(s);
  CHECK(p.plan().value == 0.0);
  CHECK(p.level4("m1", Firewall{{2967, 6668}}, 1000.0)->value == 0.0);
}

TEST_CASE("Level-4 cache solves each distinct key once") {
  auto s = workstation_scenario({{"*", {}}, {"lan", {"a", "b", "c"}}}, {{"*", "lan", {}}},
                                {{"a", 1000.0}, {"b", 1000.0}, {"c", 1000.0}});
  Planner p(s);
  auto first = p.level4("a", {}, 1000.0);
  auto again = p.level4("b", {}, 1000.0);  // same class, same key
  CHECK(first == again);
  CHECK(p.cache().solves() == 1);
  CHECK(p.cache().hits() == 1);
  CHECK(p.level4("a", {}, 0.0)->value == 0.0);
  CHECK(p.cache().trivial() == 1);
  CHECK(p.machine_class("a") == p.machine_class("c"));

  p.plan();
  CHECK(p.cache().solves() == p.cache().size());
  CHECK(p.cache().hits() > 0);
  // a fresh solve agrees bit for bit with the cached one
  Planner fresh(s);
  CHECK(fresh.level4("c", {}, 1000.0)->value == first->value);
  CHECK(first->value == doctest::Approx(machine_value(s, "a", {}, 1000.0)).epsilon(1e-12));
}

TEST_CASE("Level 3 is symmetric in identical machines") {
  auto one = workstation_scenario({{"*", {}}, {"lan", {"a", "b"}}}, {{"*", "lan", {{6668}}}}, {{"a", 1000.0}});
  auto two = workstation_scenario({{"*", {}}, {"lan", {"a", "b"}}}, {{"*", "lan", {{6668}}}}, {{"b", 1000.0}});
  Planner p1(one), p2(two);
  auto lan = p1.cleaned().network.index_of("lan");
  Firewall f{{6668}};
  double v1 = p1.level3(lan, f, 0.0, 0.0);
  double v2 = p2.level3(lan, f, 0.0, 0.0);
  CHECK(v1 == doctest::Approx(v2).epsilon(1e-12));

  // exhaustive: both choices of first machine
  Planner q(one);
  double a_first = q.level4("a", f, 1000.0 + q.level4("b", {}, 0.0)->value)->value;
  double b_first = q.level4("b", f, 0.0 + q.level4("a", {}, 1000.0)->value)->value;
  CHECK(v1 == doctest::Approx(std::max({0.0, a_first, b_first})).epsilon(1e-12));

  VertexAttack rec;
  p1.level3(lan, f, 0.0, 0.0, &rec);
  CHECK(rec.residual.size() == 1);
  CHECK(rec.value == doctest::Approx(v1));
}

TEST_CASE("Level 2 on a single-subnet component") {
  auto s = workstation_scenario({{"*", {}}, {"lan", {"a"}}}, {{"*", "lan", {{6668}}}}, {{"a", 700.0}});
  Planner p(s);
  auto lan = p.cleaned().network.index_of("lan");
  double expected = Planner(s).level3(lan, Firewall{{6668}}, 0.0, 0.0);
  CHECK(p.level2(p.cleaned().tree.component_of[lan]) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("pivot rewards flow up the component tree") {
  // cluster * N1 N2 N3, N4 hangs below N2
  auto s = workstation_scenario({{"*", {}}, {"N1", {"a"}}, {"N2", {"b"}}, {"N3", {}}, {"N4", {"d"}}},
                                {{"*", "N1", {}}, {"*", "N3", {{2967}}}, {"N1", "N2", {{6668}}}, {"N3", "N2", {}},
                                 {"N2", "N4", {}}},
                                {{"d", 5000.0}});
  Planner p(s);
  auto policy = p.plan();
  const auto& net = policy.cleaned.network;
  const auto& tree = policy.cleaned.tree;
  auto n2 = net.index_of("N2"), n4 = net.index_of("N4");
  auto c4 = tree.component_of[n4];
  CHECK(policy.pivot_rewards[n2] == doctest::Approx(policy.components[c4].value).epsilon(1e-12));
  CHECK(policy.components[c4].value == doctest::Approx(machine_value(s, "d", {}, 5000.0)).epsilon(1e-12));

  // the cluster target N2 is reached by either route; both were scored
  auto c1 = tree.component_of[n2];
  REQUIRE(policy.components[c1].paths.size() == 1);
  CHECK(policy.components[c1].paths[0].target == n2);
  CHECK(p.paths_enumerated() >= 2);
  CHECK(policy.value == doctest::Approx(policy.components[c1].value).epsilon(1e-12));

  // with the exact global solve as referee
  auto g = create_global_pomdp(s);
  CHECK(policy.value <= solve_exact(g.model).value + 1e-6);
}

TEST_CASE("each reward is claimed at most once") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 40; ++t) {
    auto s = random_scenario(rng, {4, 6, 4, false});
    Planner p(s);
    auto policy = p.plan();
    std::set<std::string> machines, pivots;
    for (const auto& c : policy.claims) {
      CHECK(c.amount > 0.0);
      if (c.kind == RewardClaim::Kind::machine) {
        CHECK(machines.insert(c.id).second);
        CHECK(c.amount == s.value(c.id));
      } else {
        CHECK(pivots.insert(c.id).second);
      }
    }
    // every path vertex was attacked through the edge it names
    for (const auto& comp : policy.components)
      for (const auto& path : comp.paths) {
        CHECK(path.vertices.size() == path.firewalls.size());
        CHECK(path.attacks.size() == path.vertices.size());
        std::set<SubnetIndex> seen(path.vertices.begin(), path.vertices.end());
        CHECK(seen.size() == path.vertices.size());
      }
  }
}

TEST_CASE("4AL never beats the exact global optimum") {
  std::mt19937_64 rng(21);
  int solved = 0, trees = 0;
  for (int t = 0; t < 90; ++t) {
    auto s = random_scenario(rng);
    auto g = small_global(s);
    if (!g) continue;
    Planner p(s);
    auto v = p.plan().value;
    ++solved;
    double exact = solve_exact(g->model).value;
    CAPTURE(t);
    CHECK(v <= exact + 1e-6);
    if (is_singleton_tree(p.cleaned())) {
      ++trees;
      CHECK(v == doctest::Approx(exact).epsilon(1e-9));
    }
  }
  CHECK(solved >= 50);
  MESSAGE("singleton-tree cases: " << trees);
}

TEST_CASE("tree of singleton subnets is planned exactly") {
  std::mt19937_64 rng(33);
  RandomScenarioOptions o;
  o.tree_singletons = true;
  int solved = 0;
  for (int t = 0; t < 30; ++t) {
    auto s = random_scenario(rng, o);
    Planner p(s);
    REQUIRE(is_singleton_tree(p.cleaned()));
    auto g = small_global(s);
    if (!g) continue;
    ++solved;
    double exact = solve_exact(g->model).value;
    CAPTURE(t);
    CHECK(std::abs(p.plan().value - exact) <= 1e-6);
  }
  CHECK(solved >= 20);
}

TEST_CASE("path enumeration cap") {
  std::vector<Subnetwork> subnets{{"*", {}}};
  std::vector<EdgeSpec> edges;
  for (int i = 0; i < 6; ++i) subnets.push_back({"N" + std::to_string(i), {}});
  subnets.back().machines = {"m"};
  for (int a = 0; a < 6; ++a) {
    edges.push_back({"*", "N" + std::to_string(a), {}});
    for (int b = 0; b < 6; ++b)
      if (a != b) edges.push_back({"N" + std::to_string(a), "N" + std::to_string(b), {}});
  }
  auto s = workstation_scenario(subnets, edges, {{"m", 1000.0}});
  PlannerOptions o;
  o.max_paths = 10;
  Planner p(s, o);
  try {
    p.plan();
    FAIL("expected the cap to trip");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::capacity);
  }
  Planner unlimited(s);
  CHECK(unlimited.plan().value > 0.0);
}

TEST_CASE("report carries the stable fields") {
  auto s = workstation_scenario({{"*", {}}, {"lan", {"m1", "m2"}}}, {{"*", "lan", {}}}, {{"m1", 1000.0}});
  Planner p(s);
  auto policy = p.plan();
  auto j = planner_report(policy, p);
  for (const char* k : {"value", "components", "pivot_rewards", "cache", "paths_enumerated", "options"})
    CHECK(j.contains(k));
  CHECK(j["value"].get<double>() == policy.value);
  const auto& attack = j["components"][1]["paths"][0]["attacks"][0];
  for (const char* k : {"subnet", "first_machine", "reward", "value", "residual_order"}) CHECK(attack.contains(k));
  CHECK(j["cache"]["solves"].get<std::size_t>() == p.cache().solves());
}

TEST_CASE("target order is configurable") {
  auto s = workstation_scenario({{"*", {}}, {"A", {"a"}}, {"B", {"b"}}},
                                {{"*", "A", {}}, {"*", "B", {}}, {"A", "B", {}}}, {{"a", 100.0}, {"b", 1000.0}});
  PlannerOptions lex;
  lex.target_order = TargetOrder::lexicographic;
  Planner p1(s), p2(s, lex);
  auto v1 = p1.plan(), v2 = p2.plan();
  auto b = v1.cleaned.network.index_of("B");
  auto a = v2.cleaned.network.index_of("A");
  CHECK(v1.components[1].paths.front().target == b);
  CHECK(v2.components[1].paths.front().target == a);
  auto exact = solve_exact(create_global_pomdp(s).model).value;
  CHECK(v1.value <= exact + 1e-6);
  CHECK(v2.value <= exact + 1e-6);
}
