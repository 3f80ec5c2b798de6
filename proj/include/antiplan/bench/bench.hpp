#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "antiplan/blockworld.hpp"
#include "antiplan/generate.hpp"
#include "antiplan/learn/exact.hpp"
#include "antiplan/search/anticipatory_search.hpp"

namespace antiplan::bench {

enum class Mode { myopic, ap, prep_myopic, prep_ap };

inline constexpr Mode kAllModes[] = {Mode::myopic, Mode::ap, Mode::prep_myopic, Mode::prep_ap};

inline std::string mode_name(Mode m) {
  switch (m) {
    case Mode::myopic: return "myopic";
    case Mode::ap: return "ap";
    case Mode::prep_myopic: return "prep+myopic";
    case Mode::prep_ap: return "prep+ap";
  }
  return "?";
}

inline Mode parse_mode(std::string_view name) {
  for (Mode m : kAllModes)
    if (mode_name(m) == name) return m;
  throw UnknownEntity("unknown configuration '" + std::string(name) + "'");
}

inline bool prepares(Mode m) { return m == Mode::prep_myopic || m == Mode::prep_ap; }
inline bool anticipates(Mode m) { return m == Mode::ap || m == Mode::prep_ap; }

struct BenchRecord {
  std::uint64_t env_seed = 0;
  int sequence_id = 0;
  int task_index = 1;  // 1-based
  Mode mode = Mode::myopic;
  Cost task_cost = 0.0;
  Cost cumulative_cost = 0.0;
  double wall_ms = 0.0;
  bool unsolvable = false;

  auto sort_key() const { return std::make_tuple(env_seed, sequence_id, task_index, static_cast<int>(mode)); }
};

/// Builds the estimator for one environment; the oracle is that
/// environment's exact oracle, usable or ignored.
using EstimatorFactory = std::function<search::Estimator(const Environment&, learn::ExactOracle&)>;

inline EstimatorFactory exact_factory() {
  return [](const Environment&, learn::ExactOracle& oracle) { return search::exact_estimator(oracle); };
}

struct BenchConfig {
  std::vector<std::uint64_t> env_seeds;
  int sequences_per_env = 20;
  int tasks_per_sequence = 5;
  std::vector<Mode> modes{std::begin(kAllModes), std::end(kAllModes)};
  std::uint64_t seed = 0;
  int prep_iterations = 200;
  std::size_t max_candidates = 64;
  bool charge_prep = false;
  bool record_timing = false;
  int threads = 0;  // 0: hardware concurrency, capped by ANTIPLAN_THREADS
  GenerationParams generation;

  /// Tighter regions and more objects than the generator defaults, so
  /// tasks regularly have to move something out of the way.
  static GenerationParams cluttered() {
    GenerationParams g;
    g.max_slots = 3;
    g.min_objects = 7;
    return g;
  }

  static BenchConfig desk() {
    BenchConfig c;
    c.generation = cluttered();
    for (std::uint64_t s = 1; s <= 8; ++s) c.env_seeds.push_back(s);
    c.sequences_per_env = 20;
    c.tasks_per_sequence = 5;
    return c;
  }
  /// Long-running.
  static BenchConfig paper() {
    BenchConfig c;
    c.generation = cluttered();
    for (std::uint64_t s = 1; s <= 32; ++s) c.env_seeds.push_back(s);
    c.sequences_per_env = 100;
    c.tasks_per_sequence = 10;
    return c;
  }

  void validate() const {
    if (env_seeds.empty() || sequences_per_env < 1 || tasks_per_sequence < 1 || modes.empty() || prep_iterations < 1)
      throw DimensionMismatch("benchmark counts must be at least 1");
  }
};

/// Starting state and task list of one sequence.
struct SequenceSpec {
  WorldState start;
  std::vector<TaskSpec> tasks;
};

inline SequenceSpec make_sequence(const Environment& env, std::uint64_t seed, int sequence_id, int length) {
  Rng rng(derive_seed(seed, env.seed, static_cast<std::uint64_t>(sequence_id), 0x736571ULL));
  SequenceSpec spec;
  spec.start = random_state(env, rng);
  for (int i = 0; i < length; ++i) spec.tasks.push_back(sample_task(env.task_distribution, rng));
  return spec;
}

/// Runs one configuration over a task sequence. The final state of each task
/// is the start of the next. `prep_cost` is added to the first task.
inline std::vector<BenchRecord> run_sequence(planner::TaskSolver& solver, const WorldState& s0, const std::vector<TaskSpec>& tasks,
                                             Mode mode, const search::Estimator* est, Cost penalty, std::size_t max_candidates = 64,
                                             Cost prep_cost = 0.0, bool record_timing = false) {
  if (anticipates(mode) && !est) throw DimensionMismatch("anticipatory configurations need an estimator");
  const Environment& env = solver.environment();
  std::vector<BenchRecord> out;
  WorldState s = s0;
  Cost cumulative = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    BenchRecord r;
    r.env_seed = env.seed;
    r.task_index = static_cast<int>(i) + 1;
    r.mode = mode;
    try {
      if (anticipates(mode)) {
        auto res = search::anticipatory_plan(solver, s, tasks[i], *est, max_candidates);
        r.task_cost = res.immediate;
        s = res.plan.final_state;
      } else {
        auto p = solver.plan_task(s, tasks[i]);
        if (!p) throw UnsolvableTask(format_task(env, tasks[i]));
        r.task_cost = p->cost;
        s = p->final_state;
      }
    } catch (const UnsolvableTask&) {
      std::fprintf(stderr, "antiplan: env %llu task %s unsolvable, charged penalty\n", static_cast<unsigned long long>(env.seed),
                   format_task(env, tasks[i]).c_str());
      r.task_cost = penalty;
      r.unsolvable = true;
    }
    if (i == 0) r.task_cost += prep_cost;
    cumulative += r.task_cost;
    r.cumulative_cost = cumulative;
    if (record_timing) r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(r);
  }
  return out;
}

/// All records of one environment, sorted.
inline std::vector<BenchRecord> run_environment(const Environment& env, const BenchConfig& cfg, const EstimatorFactory& factory) {
  learn::ExactOracle oracle(env);
  auto& solver = oracle.solver();
  const auto est = factory(env, oracle);
  const Cost penalty = oracle.penalty();
  const bool any_prep = std::any_of(cfg.modes.begin(), cfg.modes.end(), prepares);
  std::vector<BenchRecord> out;
  for (int q = 0; q < cfg.sequences_per_env; ++q) {
    const auto spec = make_sequence(env, cfg.seed, q, cfg.tasks_per_sequence);
    search::PrepareResult prep;
    if (any_prep) {
      Rng rng(derive_seed(cfg.seed, env.seed, static_cast<std::uint64_t>(q), 0x707265ULL));
      prep = search::prepare(solver, spec.start, est, cfg.prep_iterations, rng);
    }
    for (Mode m : cfg.modes) {
      const bool p = prepares(m);
      auto recs = run_sequence(solver, p ? prep.state : spec.start, spec.tasks, m, &est, penalty, cfg.max_candidates,
                               p && cfg.charge_prep ? prep.action_cost : 0.0, cfg.record_timing);
      for (auto& r : recs) r.sequence_id = q;
      out.insert(out.end(), recs.begin(), recs.end());
    }
  }
  std::sort(out.begin(), out.end(), [](const BenchRecord& a, const BenchRecord& b) { return a.sort_key() < b.sort_key(); });
  return out;
}

// ---- CSV ----

inline constexpr std::string_view kCsvVersion = "# antiplan-bench-csv v1";
inline constexpr std::string_view kCsvHeader = "env_seed,sequence_id,task_index,config,task_cost,cumulative_cost,wall_ms";

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string csv_line(const BenchRecord& r) {
  return std::to_string(r.env_seed) + "," + std::to_string(r.sequence_id) + "," + std::to_string(r.task_index) + "," + mode_name(r.mode) +
         "," + format_number(r.task_cost) + "," + format_number(r.cumulative_cost) + "," + format_number(r.wall_ms);
}

inline BenchRecord parse_csv_line(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) f.push_back(item);
  if (f.size() != 7) throw DimensionMismatch("malformed benchmark row: " + line);
  BenchRecord r;
  r.env_seed = std::stoull(f[0]);
  r.sequence_id = std::stoi(f[1]);
  r.task_index = std::stoi(f[2]);
  r.mode = parse_mode(f[3]);
  r.task_cost = std::stod(f[4]);
  r.cumulative_cost = std::stod(f[5]);
  r.wall_ms = std::stod(f[6]);
  return r;
}

/// Reads the complete rows of a benchmark CSV; a torn final line is dropped.
inline std::vector<BenchRecord> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UnknownEntity("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<BenchRecord> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty() || line[0] == '#' || line == kCsvHeader) continue;
    out.push_back(parse_csv_line(line));
  }
  return out;
}

inline void check_prefix_sums(const std::vector<BenchRecord>& recs) {
  std::map<std::tuple<std::uint64_t, int, int>, std::vector<const BenchRecord*>> groups;
  for (const auto& r : recs) groups[{r.env_seed, r.sequence_id, static_cast<int>(r.mode)}].push_back(&r);
  for (auto& [k, g] : groups) {
    std::sort(g.begin(), g.end(), [](auto* a, auto* b) { return a->task_index < b->task_index; });
    Cost sum = 0.0;
    for (const auto* r : g) {
      sum += r->task_cost;
      // CSV rounding is 1e-6 per value
      if (std::abs(sum - r->cumulative_cost) > 1e-5 * static_cast<double>(r->task_index) + 1e-9)
        throw DimensionMismatch("cumulative cost is not a prefix sum at env " + std::to_string(r->env_seed));
    }
  }
}

// ---- runner ----

inline int worker_count(int requested, std::size_t jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* cap = std::getenv("ANTIPLAN_THREADS")) {
    const int c = std::atoi(cap);
    if (c > 0) n = std::min(n, c);
  }
  return std::max(1, std::min(n, static_cast<int>(jobs)));
}

/// Runs every environment and writes the CSV at `path`. Environments already
/// complete in an existing file are kept and skipped; rows are written in
/// seed order, one environment at a time, so an interrupted file is always a
/// valid prefix.
inline std::vector<BenchRecord> run_benchmark(const BenchConfig& cfg, const std::string& path, const EstimatorFactory& factory = exact_factory(),
                                              bool resume = true, std::function<void(std::uint64_t)> on_env_done = {}) {
  cfg.validate();
  const std::size_t per_env = static_cast<std::size_t>(cfg.sequences_per_env) * static_cast<std::size_t>(cfg.tasks_per_sequence) * cfg.modes.size();

  std::map<std::uint64_t, std::vector<BenchRecord>> done;
  if (resume && !path.empty()) {
    if (std::ifstream probe(path); probe) {
      std::map<std::uint64_t, std::vector<BenchRecord>> prior;
      for (auto& r : read_csv(path)) prior[r.env_seed].push_back(r);
      for (auto& [seed, recs] : prior)
        if (recs.size() == per_env) done.emplace(seed, std::move(recs));
    }
  }

  std::vector<std::uint64_t> order = cfg.env_seeds;
  std::vector<std::vector<BenchRecord>> results(order.size());
  std::vector<char> ready(order.size(), 0);
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (const auto it = done.find(order[i]); it != done.end()) {
      results[i] = it->second;
      ready[i] = 1;
    } else {
      todo.push_back(i);
    }
  }

  std::unique_ptr<std::ofstream> out;
  if (!path.empty()) {
    out = std::make_unique<std::ofstream>(path, std::ios::trunc);
    if (!*out) throw UnknownEntity("cannot write " + path);
    *out << kCsvVersion << '\n' << kCsvHeader << '\n';
    out->flush();
  }
  std::size_t flushed = 0;
  std::mutex mu;
  std::exception_ptr failure;
  auto flush_prefix = [&] {
    while (flushed < order.size() && ready[flushed]) {
      if (out) {
        for (const auto& r : results[flushed]) *out << csv_line(r) << '\n';
        out->flush();
      }
      ++flushed;
    }
  };
  {
    std::lock_guard lock(mu);
    flush_prefix();
  }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= todo.size()) return;
      const std::size_t i = todo[j];
      try {
        const Environment env = generate_environment(order[i], cfg.generation);
        auto recs = run_environment(env, cfg, factory);
        std::lock_guard lock(mu);
        results[i] = std::move(recs);
        ready[i] = 1;
        flush_prefix();
        if (on_env_done) on_env_done(order[i]);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = todo.size();
        return;
      }
    }
  };
  const int n = worker_count(cfg.threads, todo.size());
  if (n <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<BenchRecord> all;
  for (auto& r : results) all.insert(all.end(), r.begin(), r.end());
  check_prefix_sums(all);
  return all;
}

// ---- summary ----

struct ModeSummary {
  Mode mode = Mode::myopic;
  std::size_t count = 0;
  Cost mean = 0.0;
  std::vector<Cost> per_index;  // mean cost at task index 1..n
  double slope = 0.0;           // least-squares slope of per_index
  double improvement = 0.0;     // (myopic - this) / myopic
  std::size_t unsolvable = 0;
};

struct Summary {
  std::vector<ModeSummary> modes;
  const ModeSummary* find(Mode m) const {
    for (const auto& s : modes)
      if (s.mode == m) return &s;
    return nullptr;
  }
};

inline double least_squares_slope(const std::vector<Cost>& y) {
  const double n = static_cast<double>(y.size());
  if (y.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = static_cast<double>(i + 1);
    sx += x;
    sy += y[i];
    sxx += x * x;
    sxy += x * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline Summary summarize(const std::vector<BenchRecord>& recs) {
  if (recs.empty()) throw DimensionMismatch("no records to summarize");
  std::map<int, std::pair<Cost, std::size_t>> total;
  std::map<int, std::map<int, std::pair<Cost, std::size_t>>> by_index;
  std::map<int, std::size_t> bad;
  for (const auto& r : recs) {
    const int m = static_cast<int>(r.mode);
    total[m].first += r.task_cost;
    ++total[m].second;
    by_index[m][r.task_index].first += r.task_cost;
    ++by_index[m][r.task_index].second;
    bad[m] += r.unsolvable;
  }
  Summary s;
  for (const auto& [m, t] : total) {
    ModeSummary ms;
    ms.mode = static_cast<Mode>(m);
    ms.count = t.second;
    ms.mean = t.first / static_cast<double>(t.second);
    for (const auto& [i, v] : by_index[m]) ms.per_index.push_back(v.first / static_cast<double>(v.second));
    ms.slope = least_squares_slope(ms.per_index);
    ms.unsolvable = bad[m];
    s.modes.push_back(std::move(ms));
  }
  if (const auto* base = s.find(Mode::myopic); base && base->mean > 0.0) {
    const Cost b = base->mean;
    for (auto& ms : s.modes) ms.improvement = (b - ms.mean) / b;
  }
  return s;
}

inline std::string format_summary(const Summary& s) {
  std::string out = "config         mean_cost  vs_myopic  slope     per_index\n";
  char buf[128];
  for (const auto& m : s.modes) {
    std::snprintf(buf, sizeof buf, "%-13s %10.2f %9.2f%% %7.2f   ", mode_name(m.mode).c_str(), m.mean, 100.0 * m.improvement, m.slope);
    out += buf;
    for (std::size_t i = 0; i < m.per_index.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.1f", i ? " " : "", m.per_index[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace antiplan::bench
