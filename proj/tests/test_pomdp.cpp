#include <doctest.h>

#include <functional>

#include "attackplan/error.hpp"
#include "attackplan/pomdp.hpp"
#include "support.hpp"

using namespace attackplan;
using namespace testsupport;

namespace {

// states: terminal, controlled, vul, safe; one exploit and terminate
PomdpModel one_exploit(double p, double R, double c) {
  std::vector<Outcome> out{
      {0, 0, 0}, {0, 0, 0},     // terminal
      {1, 1, 0}, {0, 0, 0},     // controlled
      {1, 1, R}, {0, 0, 0},     // vul
      {3, 2, 0}, {0, 0, 0},     // safe
  };
  return PomdpModel({"terminal", "controlled", "vul", "safe"}, {{"exploit", -c, 0}, {"terminate", 0, 0}},
                    {"none", "succeeded", "failed"}, 0, 1, out, Belief({{2, p}, {3, 1 - p}}));
}

// Value of a policy subtree from an unnormalized belief, walked by hand.
double walk(const PomdpModel& m, const PolicyNode* node, const std::vector<std::pair<StateId, double>>& w) {
  if (!node || node->action == m.terminate()) return 0.0;
  double v = 0;
  std::map<ObservationId, std::vector<std::pair<StateId, double>>> split;
  for (auto [s, p] : w) {
    v += p * m.reward(s, node->action);
    const auto& o = m.outcome(s, node->action);
    split[o.observation].emplace_back(o.next, p);
  }
  for (auto& [o, ws] : split) v += walk(m, node->child(o), ws);
  return v;
}

void check_no_dominated_nodes(const PomdpModel& m, const PolicyNode* node, const std::vector<std::pair<StateId, double>>& w) {
  if (!node || node->action == m.terminate()) return;
  CHECK(walk(m, node, w) >= -1e-9);
  std::map<ObservationId, std::vector<std::pair<StateId, double>>> split;
  for (auto [s, p] : w) {
    const auto& o = m.outcome(s, node->action);
    split[o.observation].emplace_back(o.next, p);
  }
  for (auto& [o, ws] : split) check_no_dominated_nodes(m, node->child(o), ws);
}

}  // namespace

TEST_CASE("belief normalizes its entries") {
  Belief b({{3, 0.25}, {1, 0.5}, {3, 0.25}, {2, 0.0}});
  REQUIRE(b.size() == 2);
  CHECK(b.entries()[0].first == 1);
  CHECK(b.probability(3) == 0.5);
  CHECK(b.probability(2) == 0.0);
}

TEST_CASE("model validation") {
  auto ok = one_exploit(0.2, 1000, 10);
  CHECK(ok.state_count() == 4);
  std::vector<Outcome> bad(8, Outcome{0, 0, 0});
  CHECK_THROWS_AS(PomdpModel({"t", "a", "b", "c"}, {{"x", 5, 0}, {"terminate", 0, 0}}, {"o"}, 0, 1, bad, Belief::point(1)),
                  Error);
  CHECK_THROWS_AS(PomdpModel({"t", "a", "b", "c"}, {{"x", 0, 0}, {"terminate", 0, 0}}, {"o"}, 0, 1, bad, Belief({{1, 0.5}})),
                  Error);
  auto loop = bad;
  loop[2 * 2 + 1] = {2, 0, 0};  // terminate not leading to terminal
  CHECK_THROWS_AS(PomdpModel({"t", "a", "b", "c"}, {{"x", 0, 0}, {"terminate", 0, 0}}, {"o"}, 0, 1, loop, Belief::point(1)),
                  Error);
  auto leak = bad;
  leak[0] = {1, 0, 0};  // terminal not absorbing
  CHECK_THROWS_AS(PomdpModel({"t", "a", "b", "c"}, {{"x", 0, 0}, {"terminate", 0, 0}}, {"o"}, 0, 1, leak, Belief::point(1)),
                  Error);
}

TEST_CASE("only terminate is worth nothing") {
  PomdpModel m({"terminal", "s"}, {{"terminate", 0, 0}}, {"none"}, 0, 0, {{0, 0, 0}, {0, 0, 0}}, Belief::point(1));
  auto r = solve_exact(m);
  CHECK(r.value == 0.0);
  CHECK(r.policy->action == m.terminate());
  CHECK(brute_force_value(m) == 0.0);
  CHECK(evaluate_policy(m, *terminate_policy(m)) == 0.0);
}

TEST_CASE("one exploit closed form") {
  auto m = one_exploit(0.2, 1000, 10);
  CHECK(solve_exact(m).value == doctest::Approx(190.0).epsilon(1e-12));
  CHECK(brute_force_value(m) == doctest::Approx(190.0).epsilon(1e-12));
  auto low = one_exploit(0.005, 1000, 10);
  CHECK(solve_exact(low).value == 0.0);
  CHECK(solve_exact(low).policy->action == low.terminate());
}

TEST_CASE("belief update") {
  auto m = one_exploit(0.2, 1000, 10);
  auto post = belief_update(m.initial_belief(), 0, *m.find_observation("failed"), m);
  CHECK(post.size() == 1);
  CHECK(post.probability(3) == doctest::Approx(1.0));
  auto point = belief_update(Belief::point(2), 0, *m.find_observation("succeeded"), m);
  CHECK(point.probability(1) == 1.0);
  CHECK(observation_probability(m.initial_belief(), 0, 1, m) == doctest::Approx(0.2));
  try {
    belief_update(Belief::point(2), 0, *m.find_observation("failed"), m);
    FAIL("expected impossible observation");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::impossible_observation);
  }
}

TEST_CASE("exact solver equals brute force on random models") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 200; ++t) {
    auto m = random_pomdp(rng);
    CAPTURE(t);
    auto r = solve_exact(m);
    CHECK(std::abs(r.value - brute_force_value(m)) <= 1e-9);
    CHECK(std::abs(evaluate_policy(m, *r.policy) - r.value) <= 1e-9);
    CHECK(std::abs(walk(m, r.policy.get(), m.initial_belief().entries()) - r.value) <= 1e-9);
    CHECK(satisfies_no_repeat(*r.policy));
    CHECK(policy_depth(*r.policy) <= m.action_count());
    CHECK(r.value >= 0.0);
    check_no_dominated_nodes(m, r.policy.get(), m.initial_belief().entries());
  }
}

TEST_CASE("removing an action never helps") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 100; ++t) {
    auto m = random_pomdp(rng, 10, 6);
    if (m.action_count() < 2) continue;
    auto full = solve_exact(m).value;
    ActionId drop = pick(rng, 0, m.action_count() - 2);
    auto smaller = m.without_actions({drop});
    CHECK(smaller.action_count() == m.action_count() - 1);
    CHECK(solve_exact(smaller).value <= full + 1e-9);
  }
  auto m = one_exploit(0.2, 1000, 10);
  CHECK_THROWS_AS(m.without_actions({m.terminate()}), Error);
}

TEST_CASE("ties go to terminate") {
  // p R - c = 0 exactly
  auto m = one_exploit(0.01, 1000, 10);
  auto r = solve_exact(m);
  CHECK(r.value == doctest::Approx(0.0));
  CHECK(r.policy->action == m.terminate());
}

TEST_CASE("a fixed suboptimal plan scores no more than the optimum") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    auto m = random_pomdp(rng);
    // play every action once in index order, ignoring observations
    PolicyPtr tail = terminate_policy(m);
    for (ActionId a = m.terminate(); a-- > 0;) {
      auto node = std::make_shared<PolicyNode>();
      node->action = a;
      for (ObservationId o = 0; o < m.observation_count(); ++o) node->children.emplace_back(o, tail);
      tail = node;
    }
    CHECK(evaluate_policy(m, *tail) <= solve_exact(m).value + 1e-9);
    CHECK(satisfies_no_repeat(*tail));
  }
}

TEST_CASE("brute force refuses large action sets") {
  std::vector<ActionInfo> actions;
  for (int a = 0; a < 8; ++a) actions.push_back({"a" + std::to_string(a), -1, 0});
  actions.push_back({"terminate", 0, 0});
  std::vector<Outcome> out;
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 9; ++a) out.push_back({s == 0 || a == 8 ? 0u : 1u, 0, 0});
  PomdpModel m({"terminal", "s"}, actions, {"none"}, 0, 8, out, Belief::point(1));
  try {
    brute_force_value(m);
    FAIL("expected refusal");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::capacity);
  }
  CHECK(solve_exact(m).value == 0.0);
}
