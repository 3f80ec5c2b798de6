#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "antiplan/blockworld.hpp"
#include "antiplan/planner/task_solver.hpp"

namespace antiplan::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline json state_json(const Environment& env, const WorldState& s) {
  json placements = json::object();
  for (std::size_t o = 0; o < s.placements.size(); ++o)
    if (s.placements[o] != kNone) placements[env.objects[o].id] = env.slots[static_cast<std::size_t>(s.placements[o])].id;
  json j{{"placements", placements}, {"robot_at", env.regions[static_cast<std::size_t>(s.robot_at)].id}};
  j["holding"] = s.holding == kNone ? json(nullptr) : json(env.objects[static_cast<std::size_t>(s.holding)].id);
  return j;
}

inline WorldState state_from_json(const Environment& env, const json& j) {
  WorldState s;
  s.placements.assign(env.objects.size(), kNone);
  for (const auto& [obj, slot] : j.at("placements").items()) s.placements[static_cast<std::size_t>(env.object_index(obj))] = env.slot_index(slot.get<std::string>());
  s.robot_at = env.region_index(j.at("robot_at").get<std::string>());
  if (j.contains("holding") && !j["holding"].is_null()) s.holding = env.object_index(j["holding"].get<std::string>());
  if (!is_valid_state(env, s)) throw UnknownEntity("state violates slot capacity or holding rules");
  return s;
}

inline json task_json(const Environment& env, const TaskSpec& t) {
  json d = json::array();
  for (const auto& x : t.directives)
    d.push_back({{"object", env.objects[static_cast<std::size_t>(x.object)].id}, {"region", env.regions[static_cast<std::size_t>(x.region)].id}});
  return d;
}

inline TaskSpec task_from_json(const Environment& env, const json& j) {
  TaskSpec t;
  for (const auto& d : j) t.directives.push_back({env.object_index(d.at("object").get<std::string>()), env.region_index(d.at("region").get<std::string>())});
  validate_task(env, t);
  return t;
}

inline json rgba_json(Color c) {
  const auto v = rgba_of(c);
  return json::array({v.r, v.g, v.b, v.a});
}

inline json environment_json(const Environment& env) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = env.seed;
  j["width"] = env.width;
  j["height"] = env.height;
  j["robot_radius"] = env.robot_radius;
  j["cost_per_meter"] = env.cost_per_meter;
  j["regions"] = json::array();
  for (const auto& r : env.regions) {
    json slots = json::array();
    for (int s : r.slots) {
      const auto& sl = env.slots[static_cast<std::size_t>(s)];
      slots.push_back({{"id", sl.id}, {"position", {sl.position.x, sl.position.y}}});
    }
    j["regions"].push_back({{"id", r.id},
                            {"color", std::string(color_name(r.color))},
                            {"rgba", rgba_json(r.color)},
                            {"footprint", {r.footprint.x0, r.footprint.y0, r.footprint.x1, r.footprint.y1}},
                            {"approach_point", {r.approach_point.x, r.approach_point.y}},
                            {"slots", slots}});
  }
  j["objects"] = json::array();
  for (const auto& o : env.objects)
    j["objects"].push_back({{"id", o.id}, {"color", std::string(color_name(o.color))}, {"rgba", rgba_json(o.color)}, {"semantic_class", o.semantic_class}});
  const json s = state_json(env, env.initial_state);
  j["placements"] = s["placements"];
  j["robot_at"] = s["robot_at"];
  j["task_distribution"] = json::array();
  for (const auto& e : env.task_distribution.entries) j["task_distribution"].push_back({{"task", task_json(env, e.task)}, {"probability", e.probability}});
  json mc = json::array();
  for (int a = 0; a < env.move_costs.size(); ++a) {
    json row = json::array();
    for (int b = 0; b < env.move_costs.size(); ++b) row.push_back(env.move_costs(a, b));
    mc.push_back(row);
  }
  j["move_costs"] = {{"locations", json::array()}, {"costs", mc}};
  for (const auto& r : env.regions) j["move_costs"]["locations"].push_back(r.id);
  return j;
}

inline Environment environment_from_json(const json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion) throw UnknownEntity("unsupported environment schema_version");
  Environment env;
  env.seed = j.at("seed").get<std::uint64_t>();
  env.width = j.at("width").get<double>();
  env.height = j.at("height").get<double>();
  env.robot_radius = j.at("robot_radius").get<double>();
  env.cost_per_meter = j.value("cost_per_meter", env.cost_per_meter);
  auto color = [](const json& c) {
    const auto v = color_from_name(c.get<std::string>());
    if (!v) throw UnknownEntity("unknown color " + c.get<std::string>());
    return *v;
  };
  for (const auto& r : j.at("regions")) {
    Region reg;
    reg.id = r.at("id").get<std::string>();
    reg.color = color(r.at("color"));
    const auto fp = r.at("footprint");
    reg.footprint = {fp.at(0).get<double>(), fp.at(1).get<double>(), fp.at(2).get<double>(), fp.at(3).get<double>()};
    reg.approach_point = {r.at("approach_point").at(0).get<double>(), r.at("approach_point").at(1).get<double>()};
    const int g = static_cast<int>(env.regions.size());
    for (const auto& s : r.at("slots")) {
      reg.slots.push_back(static_cast<int>(env.slots.size()));
      env.slots.push_back({s.at("id").get<std::string>(), {s.at("position").at(0).get<double>(), s.at("position").at(1).get<double>()}, g});
    }
    env.regions.push_back(std::move(reg));
  }
  for (const auto& o : j.at("objects"))
    env.objects.push_back({o.at("id").get<std::string>(), color(o.at("color")), o.value("semantic_class", std::string("block"))});
  env.initial_state = state_from_json(env, {{"placements", j.at("placements")}, {"robot_at", j.at("robot_at")}});
  for (const auto& e : j.at("task_distribution")) env.task_distribution.entries.push_back({task_from_json(env, e.at("task")), e.at("probability").get<double>()});
  if (!env.task_distribution.valid()) throw UnknownEntity("task distribution probabilities must be positive and sum to 1");
  const auto& costs = j.at("move_costs").at("costs");
  env.move_costs = MoveCostTable(env.num_regions());
  if (static_cast<int>(costs.size()) != env.num_regions()) throw MissingMoveCost("move cost table does not cover every location");
  for (int a = 0; a < env.num_regions(); ++a)
    for (int b = 0; b < env.num_regions(); ++b) env.move_costs.set(a, b, costs.at(static_cast<std::size_t>(a)).at(static_cast<std::size_t>(b)).get<double>());
  return env;
}

inline std::string environment_filename(std::uint64_t seed) { return "env_" + std::to_string(seed) + ".json"; }

inline void save_environment(const Environment& env, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UnknownEntity("cannot write " + path);
  out << environment_json(env).dump(1) << '\n';
}

inline Environment load_environment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UnknownEntity("cannot open " + path);
  return environment_from_json(json::parse(in));
}

inline json plan_json(const Environment& env, const planner::WorldPlan& p) {
  json a = json::array();
  for (const auto& x : p.actions) a.push_back(to_string(env, x));
  return {{"actions", a}, {"cost", p.cost}, {"expanded", p.expanded}};
}

}  // namespace antiplan::io
