#include <gtest/gtest.h>

#include <filesystem>

#include "antiplan/generate.hpp"
#include "antiplan/io/json.hpp"
#include "fixtures.hpp"

using namespace antiplan;
using namespace antiplan::io;

namespace {

void expect_same_env(const Environment& a, const Environment& b) {
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.width, b.width);
  EXPECT_EQ(a.robot_radius, b.robot_radius);
  ASSERT_EQ(a.regions.size(), b.regions.size());
  for (std::size_t r = 0; r < a.regions.size(); ++r) {
    EXPECT_EQ(a.regions[r].id, b.regions[r].id);
    EXPECT_EQ(a.regions[r].color, b.regions[r].color);
    EXPECT_EQ(a.regions[r].slots, b.regions[r].slots);
    EXPECT_EQ(a.regions[r].approach_point.x, b.regions[r].approach_point.x);
  }
  ASSERT_EQ(a.slots.size(), b.slots.size());
  for (std::size_t s = 0; s < a.slots.size(); ++s) {
    EXPECT_EQ(a.slots[s].id, b.slots[s].id);
    EXPECT_EQ(a.slots[s].position.y, b.slots[s].position.y);
  }
  ASSERT_EQ(a.objects.size(), b.objects.size());
  for (std::size_t o = 0; o < a.objects.size(); ++o) EXPECT_EQ(a.objects[o].color, b.objects[o].color);
  EXPECT_EQ(a.initial_state, b.initial_state);
  EXPECT_EQ(a.move_costs, b.move_costs);
  ASSERT_EQ(a.task_distribution.entries.size(), b.task_distribution.entries.size());
  for (std::size_t i = 0; i < a.task_distribution.entries.size(); ++i) {
    EXPECT_EQ(a.task_distribution.entries[i].task, b.task_distribution.entries[i].task);
    EXPECT_EQ(a.task_distribution.entries[i].probability, b.task_distribution.entries[i].probability);
  }
}

}  // namespace

TEST(Json, GeneratedEnvironmentRoundTrip) {
  const auto env = generate_environment(11);
  const auto back = environment_from_json(environment_json(env));
  expect_same_env(env, back);
  EXPECT_EQ(environment_json(back).dump(), environment_json(env).dump());
}

TEST(Json, FileRoundTrip) {
  const auto env = fixtures::parking_fixture();
  const auto path = (std::filesystem::temp_directory_path() / environment_filename(12345)).string();
  save_environment(env, path);
  expect_same_env(env, load_environment(path));
  std::filesystem::remove(path);
  EXPECT_THROW(load_environment(path), UnknownEntity);
  EXPECT_EQ(environment_filename(7), "env_7.json");
}

TEST(Json, StateRoundTripIncludingHeldObject) {
  const auto env = generate_environment(11);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    auto s = random_state(env, rng);
    if (i % 2) {
      const int o = static_cast<int>(rng.below(env.objects.size()));
      s.placements[o] = kNone;
      s.holding = o;
    }
    EXPECT_EQ(state_from_json(env, state_json(env, s)), s);
  }
}

TEST(Json, RejectsBadInput) {
  const auto env = fixtures::parking_fixture();
  auto j = state_json(env, env.initial_state);
  j["placements"]["F"] = "red_s1";  // already holds A
  EXPECT_THROW(state_from_json(env, j), UnknownEntity);
  auto e = environment_json(env);
  e["schema_version"] = 99;
  EXPECT_THROW(environment_from_json(e), UnknownEntity);
  e = environment_json(env);
  e["task_distribution"][0]["probability"] = 0.5;
  EXPECT_THROW(environment_from_json(e), UnknownEntity);
  EXPECT_THROW(task_from_json(env, nlohmann::json::parse(R"([{"object":"Z","region":"red"}])")), UnknownEntity);
}

TEST(Json, TaskAndPlan) {
  const auto env = fixtures::parking_fixture();
  const auto t = parse_task(env, "B:red,C:red");
  EXPECT_EQ(task_from_json(env, task_json(env, t)), t);
  EXPECT_EQ(task_json(env, t).dump(), R"([{"object":"B","region":"red"},{"object":"C","region":"red"}])");
  planner::TaskSolver solver(env);
  const auto p = solver.plan_task(env.initial_state, parse_task(env, "A:blue"));
  ASSERT_TRUE(p);
  const auto j = plan_json(env, *p);
  EXPECT_EQ(j["actions"].size(), p->actions.size());
  EXPECT_EQ(j["cost"].get<double>(), p->cost);
}
