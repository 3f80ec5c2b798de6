#include <gtest/gtest.h>

#include "antiplan/generate.hpp"
#include "antiplan/planner/task_solver.hpp"
#include "antiplan/search/anticipatory_search.hpp"
#include "fixtures.hpp"

using namespace antiplan;
using namespace antiplan::planner;

namespace {

pddl::GroundedProblem grounded(const Environment& env, const WorldState& s, const TaskSpec& t) {
  return pddl::ground(pddl::blockworld_domain(), env, s, t, env.move_costs);
}

Cost replay(const Environment& env, const WorldState& s0, const WorldPlan& p, WorldState* end = nullptr) {
  WorldState s = s0;
  Cost c = 0.0;
  for (const auto& a : p.actions) {
    c += action_cost(env, a);
    s = apply_action(env, s, a);
  }
  if (end) *end = s;
  return c;
}

}  // namespace

TEST(Plan, SatisfiedGoalIsEmptyPlan) {
  const auto env = fixtures::parking_fixture();
  const auto r = plan(grounded(env, env.initial_state, parse_task(env, "A:red")));
  ASSERT_TRUE(r);
  EXPECT_TRUE(r->actions.empty());
  EXPECT_EQ(r->cost, 0.0);
  EXPECT_EQ(optimal_cost(env, env.initial_state, parse_task(env, "A:red")), 0.0);
}

TEST(Plan, SingleRelocationHandCount) {
  // robot at blue, A on red: go to red, pick, come back, place
  const auto env = fixtures::make_env({{"red", Color::red, 2, {1, 1}}, {"blue", Color::blue, 2, {4, 5}}}, {{"A", Color::red}},
                                      {"red_s1"}, "blue");
  const Cost m = env.move_costs(1, 0);
  EXPECT_EQ(m, env.move_costs(0, 1));
  EXPECT_EQ(optimal_cost(env, env.initial_state, parse_task(env, "A:blue")), m + 100 + m + 100);
  TaskSolver solver(env);
  const auto p = solver.plan_task(env.initial_state, parse_task(env, "A:blue"));
  ASSERT_TRUE(p);
  ASSERT_EQ(p->actions.size(), 4u);
  EXPECT_EQ(p->actions[0].kind, WorldAction::Kind::move);
  EXPECT_EQ(p->actions[1].kind, WorldAction::Kind::pick);
  EXPECT_EQ(p->actions[3].kind, WorldAction::Kind::place);
}

TEST(Plan, MatchesUniformCostOracle) {
  Rng rng(101);
  int solvable = 0;
  for (int i = 0; i < 200; ++i) {
    const auto env = fixtures::random_small_env(rng, 6, 10);
    const auto task = fixtures::random_task(env, rng);
    const auto expect = fixtures::ucs_cost(env, env.initial_state, task);
    TaskSolver solver(env);
    const auto got = solver.plan_task(env.initial_state, task);
    ASSERT_EQ(expect.has_value(), got.has_value()) << i;
    if (!got) continue;
    ++solvable;
    ASSERT_EQ(got->cost, *expect) << i;
    WorldState end;
    ASSERT_EQ(replay(env, env.initial_state, *got, &end), got->cost);
    ASSERT_TRUE(is_task_satisfied(env, end, task));
    // the unpruned search agrees as well
    const auto full = plan(grounded(env, env.initial_state, task));
    ASSERT_TRUE(full);
    ASSERT_EQ(full->cost, got->cost);
  }
  EXPECT_GT(solvable, 150);
}

TEST(Plan, UnsolvableIsDistinct) {
  // two objects, one single-slot target region
  const auto env = fixtures::make_env({{"red", Color::red, 1, {1, 1}}, {"blue", Color::blue, 3, {4, 5}}},
                                      {{"A", Color::red}, {"B", Color::red}}, {"blue_s1", "blue_s2"}, "blue");
  const auto task = parse_task(env, "A:red,B:red");
  TaskSolver solver(env);
  EXPECT_FALSE(solver.plan_task(env.initial_state, task).has_value());
  EXPECT_FALSE(solver.task_cost(env.initial_state, task).has_value());
  EXPECT_THROW(optimal_cost(env, env.initial_state, task), UnsolvableTask);
  EXPECT_EQ(solver.task_cost_bound(env.initial_state, task), kInfiniteCost);
}

TEST(Plan, DeterministicPlans) {
  const auto env = generate_environment(7);
  Rng rng(3);
  for (int i = 0; i < 5; ++i) {
    const auto s = random_state(env, rng);
    const auto& t = env.task_distribution.entries[rng.below(env.task_distribution.entries.size())].task;
    TaskSolver a(env), b(env);
    const auto pa = a.plan_task(s, t), pb = b.plan_task(s, t);
    ASSERT_TRUE(pa && pb);
    EXPECT_EQ(pa->ground_actions, pb->ground_actions);
  }
}

TEST(Hmax, GoalInSetIsZero) {
  const auto env = fixtures::parking_fixture();
  const auto gp = grounded(env, env.initial_state, parse_task(env, "A:red"));
  EXPECT_EQ(hmax(gp, gp.init), 0.0);
}

TEST(Hmax, OneStep) {
  pddl::GroundedProblem gp;
  gp.facts = {{"p", {}}, {"q", {}}};
  pddl::GroundAction a;
  a.name = "a";
  a.pre = {0};
  a.add = {1};
  a.cost = 100.0;
  gp.actions = {a};
  gp.init = {0};
  gp.goal = {1};
  EXPECT_EQ(hmax(gp, gp.init), 100.0);
  EXPECT_EQ(hmax(gp, std::vector<pddl::FactId>{}), kInfiniteCost);
}

TEST(Hmax, AdmissibleOnRandomInstances) {
  Rng rng(202);
  int violations = 0, checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto env = fixtures::random_small_env(rng, 4, 7);
    const auto task = fixtures::random_task(env, rng);
    const auto gp = grounded(env, env.initial_state, task);
    const auto opt = fixtures::ucs_cost(env, env.initial_state, task);
    const Cost h = hmax(gp, gp.init);
    if (!opt) continue;
    ++checked;
    violations += h > *opt;
  }
  EXPECT_EQ(violations, 0);
  EXPECT_GT(checked, 800);
}

TEST(CountingBound, NeverExceedsOptimalCost) {
  // every goal shape against uniform-cost search, from hand-empty and
  // holding states
  Rng rng(404);
  int violations = 0, checked = 0, informative = 0;
  for (int i = 0; i < 400; ++i) {
    const auto env = fixtures::random_small_env(rng, 5, 8);
    TaskSolver solver(env);
    const auto& world = solver.world();
    AStar ucs(solver.compiled());
    SearchOptions blind;
    blind.use_heuristic = false;
    WorldState s0 = env.initial_state;
    if (rng.below(3) == 0) {
      const int o = static_cast<int>(rng.below(env.objects.size()));
      s0.robot_at = env.region_of_slot(s0.placements[o]);
      s0.holding = o;
      s0.placements[o] = kNone;
    }
    const auto bits = to_bits(solver.compiled(), world.facts_of(s0));
    WorldState target = random_state(env, rng);
    target.robot_at = static_cast<int>(rng.below(env.regions.size()));
    const std::vector<std::vector<FactId>> goals{world.goal_of(fixtures::random_task(env, rng)), world.goal_of_state(target),
                                                 world.goal_of_state(target, true), world.goal_of_region_state(target)};
    for (const auto& goal : goals) {
      const auto opt = ucs.solve(world.facts_of(s0), goal, blind);
      const Cost h = world.counting_bound(goal)(bits);
      if (!opt) continue;
      ++checked;
      violations += h > opt->cost;
      informative += h > 0.0;
    }
  }
  EXPECT_EQ(violations, 0);
  EXPECT_GT(checked, 1200);
  EXPECT_GT(informative, checked / 2);
}

TEST(CountingBound, ForcedOccupantsAndRobotTarget) {
  const auto env = fixtures::parking_fixture();
  TaskSolver solver(env);
  const auto& world = solver.world();
  const auto bits = to_bits(solver.compiled(), world.facts_of(env.initial_state));
  const auto task = parse_task(env, "B:red,C:red");
  // A sits on red_s1 and stays free: B and C need both red slots, so A moves
  // (200), B and C each need a pick and a place (400), and the robot must
  // reach green and red from blue
  const Cost far = std::max(env.move_costs(env.region_index("blue"), env.region_index("green")),
                            env.move_costs(env.region_index("blue"), env.region_index("red")));
  EXPECT_EQ(world.counting_bound(world.goal_of(task))(bits), 600.0 + far);
  WorldState target = env.initial_state;
  target.robot_at = env.region_index("white");
  const Cost there = env.move_costs(env.region_index("blue"), env.region_index("white"));
  EXPECT_EQ(world.counting_bound(world.goal_of_region_state(target))(bits), there);
  EXPECT_EQ(world.counting_bound(world.goal_of_state(env.initial_state))(bits), 0.0);
}

TEST(OptimalCost, ClutterNeverHelps) {
  // probe suite: the same tasks with and without an extra blocking object
  Rng rng(31);
  for (int i = 0; i < 40; ++i) {
    auto env = fixtures::random_small_env(rng, 3, 8);
    if (env.num_objects() + 2 > env.num_slots()) continue;
    const auto task = fixtures::random_task(env, rng);
    const auto base = fixtures::ucs_cost(env, env.initial_state, task);
    // add a clutter block in a free slot of the first directive's region, or
    // anywhere free
    Environment cluttered = env;
    cluttered.objects.push_back({"Z", Color::white, "block"});
    WorldState s = env.initial_state;
    int free_slot = kNone;
    for (int slot : env.regions[task.directives[0].region].slots)
      if (std::find(s.placements.begin(), s.placements.end(), slot) == s.placements.end()) free_slot = slot;
    for (int slot = 0; free_slot == kNone && slot < env.num_slots(); ++slot)
      if (std::find(s.placements.begin(), s.placements.end(), slot) == s.placements.end()) free_slot = slot;
    s.placements.push_back(free_slot);
    cluttered.initial_state = s;
    const auto more = fixtures::ucs_cost(cluttered, s, task);
    if (!base) continue;
    if (!more) continue;  // clutter may make it infeasible, which is also not cheaper
    EXPECT_GE(*more, *base);
    TaskSolver a(env), b(cluttered);
    EXPECT_GE(*b.task_cost(s, task), *a.task_cost(env.initial_state, task));
  }
}

TEST(OptimalCost, AgreesWithPlanOn500Cases) {
  const auto env = generate_environment(2);
  TaskSolver solver(env);
  Rng rng(44);
  for (int i = 0; i < 500; ++i) {
    const auto s = random_state(env, rng);
    const auto& t = env.task_distribution.entries[rng.below(env.task_distribution.entries.size())].task;
    const auto c = solver.task_cost(s, t);
    const auto p = solver.plan_task(s, t);
    ASSERT_EQ(c.has_value(), p.has_value());
    if (c) {
      ASSERT_EQ(*c, is_task_satisfied(env, s, t) ? 0.0 : p->cost);
    }
  }
}

TEST(PlanToState, ReachesExactTarget) {
  const auto env = fixtures::parking_fixture();
  TaskSolver solver(env);
  WorldState target = env.initial_state;
  target.placements[1] = env.slot_index("white_s1");
  target.placements[0] = env.slot_index("blue_s1");
  target.robot_at = env.region_index("red");
  const auto loose = solver.plan_to_state(env.initial_state, target);
  const auto pinned = solver.plan_to_state(env.initial_state, target, true);
  ASSERT_TRUE(loose && pinned);
  EXPECT_EQ(loose->final_state.placements, target.placements);
  EXPECT_EQ(pinned->final_state, target);
  EXPECT_LE(loose->cost, pinned->cost);
  const auto region = solver.plan_to_region_state(env.initial_state, target);
  ASSERT_TRUE(region);
  EXPECT_EQ(region->cost, pinned->cost);
  EXPECT_EQ(region_key(env, region->final_state), region_key(env, target));
}

TEST(SequenceOracle, SingleTaskIsOptimalCost) {
  const auto env = fixtures::parking_fixture();
  const auto t = parse_task(env, "A:blue");
  TaskSolver solver(env);
  const auto p = solver.plan_task(env.initial_state, t);
  ASSERT_TRUE(p);
  const auto cands = search::alternate_goal_states(env, env.initial_state, t, *p);
  const auto sol = sequence_oracle(env, env.initial_state, {t}, {cands});
  EXPECT_EQ(sol.total, optimal_cost(env, env.initial_state, t));
  ASSERT_EQ(sol.states.size(), 1u);
  EXPECT_TRUE(is_task_satisfied(env, sol.states[0], t));
}

TEST(SequenceOracle, NeverWorseThanMyopicChain) {
  Rng rng(77);
  int tested = 0;
  while (tested < 20) {
    auto env = fixtures::random_small_env(rng, 3, 6);
    const auto t1 = fixtures::random_task(env, rng), t2 = fixtures::random_task(env, rng);
    TaskSolver solver(env);
    const auto p1 = solver.plan_task(env.initial_state, t1);
    if (!p1) continue;
    const auto p2 = solver.plan_task(p1->final_state, t2);
    if (!p2) continue;
    ++tested;
    auto c1 = search::alternate_goal_states(env, env.initial_state, t1, *p1, 8);
    std::vector<WorldState> c2{p2->final_state};
    for (const auto& g : c1)
      if (auto q = solver.plan_task(g, t2)) c2.push_back(q->final_state);
    const auto sol = sequence_oracle(env, env.initial_state, {t1, t2}, {c1, c2});
    EXPECT_LE(sol.total, p1->cost + p2->cost);
    // candidate order does not change the optimum
    std::reverse(c1.begin(), c1.end());
    std::reverse(c2.begin(), c2.end());
    EXPECT_EQ(sequence_oracle(env, env.initial_state, {t1, t2}, {c1, c2}).total, sol.total);
  }
}

TEST(SequenceOracle, StrictGainOnParkingFixture) {
  const auto env = fixtures::parking_fixture();
  const auto t1 = parse_task(env, "A:blue"), t2 = parse_task(env, "B:red,C:red");
  TaskSolver solver(env);
  const auto p1 = solver.plan_task(env.initial_state, t1);
  const auto p2 = solver.plan_task(p1->final_state, t2);
  const auto c1 = search::alternate_goal_states(env, env.initial_state, t1, *p1);
  std::vector<WorldState> c2;
  for (const auto& g : c1)
    if (auto q = solver.plan_task(g, t2)) c2.push_back(q->final_state);
  const auto sol = sequence_oracle(env, env.initial_state, {t1, t2}, {c1, c2});
  EXPECT_LT(sol.total, p1->cost + p2->cost);
  EXPECT_EQ(region_of_object(env, sol.states[0], env.object_index("F")), env.region_index("white"));
  EXPECT_THROW(sequence_oracle(env, env.initial_state, {t1, t1, t1, t1}, {c1, c1, c1, c1}), DimensionMismatch);
}
