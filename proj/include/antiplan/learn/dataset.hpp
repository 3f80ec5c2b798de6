#pragma once

#include <atomic>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "antiplan/generate.hpp"
#include "antiplan/learn/exact.hpp"
#include "antiplan/learn/train.hpp"

namespace antiplan::learn {

struct DatasetConfig {
  std::vector<std::uint64_t> env_seeds;
  int states_per_env = 200;
  std::uint64_t seed = 0;
  int threads = 0;
  GenerationParams generation;
};

/// Seeds 1..train for training and train+1..train+test for testing.
inline std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>> split_seeds(int train = 250, int test = 150) {
  std::vector<std::uint64_t> a, b;
  for (int i = 1; i <= train; ++i) a.push_back(static_cast<std::uint64_t>(i));
  for (int i = train + 1; i <= train + test; ++i) b.push_back(static_cast<std::uint64_t>(i));
  return {a, b};
}

/// Random hand-empty states of one environment labeled with the exact
/// anticipatory cost.
inline std::vector<TrainingDatum> label_environment(const Environment& env, int states, std::uint64_t seed) {
  ExactOracle oracle(env);
  Rng rng(derive_seed(seed, env.seed, 0x646174ULL));
  std::vector<TrainingDatum> out;
  for (int i = 0; i < states; ++i) {
    const WorldState s = random_state(env, rng);
    out.push_back({encode_state(env, s), oracle(s), env.seed});
  }
  return out;
}

/// Environments are labeled in parallel and concatenated in seed order.
inline std::vector<TrainingDatum> generate_dataset(const DatasetConfig& cfg) {
  std::vector<std::vector<TrainingDatum>> parts(cfg.env_seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= parts.size()) return;
      try {
        const Environment env = generate_environment(cfg.env_seeds[i], cfg.generation);
        parts[i] = label_environment(env, cfg.states_per_env, cfg.seed);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = parts.size();
        return;
      }
    }
  };
  int n = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* cap = std::getenv("ANTIPLAN_THREADS"); cap && std::atoi(cap) > 0) n = std::min(n, std::atoi(cap));
  n = std::max(1, std::min(n, static_cast<int>(parts.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<TrainingDatum> out;
  for (auto& p : parts) out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  return out;
}

inline nlohmann::json datum_json(const TrainingDatum& d) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& f : d.graph.nodes) nodes.push_back(std::vector<double>(f.begin(), f.end()));
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : d.graph.edges) edges.push_back({a, b});
  return {{"env_seed", d.env_seed}, {"graph", {{"nodes", nodes}, {"edges", edges}}}, {"label", d.label}};
}

inline TrainingDatum datum_from_json(const nlohmann::json& j) {
  TrainingDatum d;
  d.env_seed = j.value("env_seed", std::uint64_t{0});
  d.label = j.at("label").get<double>();
  for (const auto& n : j.at("graph").at("nodes")) {
    if (n.size() != static_cast<std::size_t>(kFeatureDim)) throw DimensionMismatch("node feature must have 9 entries");
    NodeFeature f{};
    for (int i = 0; i < kFeatureDim; ++i) f[static_cast<std::size_t>(i)] = n[static_cast<std::size_t>(i)].get<double>();
    d.graph.nodes.push_back(f);
  }
  for (const auto& e : j.at("graph").at("edges")) d.graph.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return d;
}

inline void write_dataset(const std::vector<TrainingDatum>& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UnknownEntity("cannot write " + path);
  for (const auto& d : data) out << datum_json(d).dump() << '\n';
}

inline std::vector<TrainingDatum> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UnknownEntity("cannot open " + path);
  std::vector<TrainingDatum> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(datum_from_json(nlohmann::json::parse(line)));
  return out;
}

}  // namespace antiplan::learn
