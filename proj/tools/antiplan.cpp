// antiplan command-line entry point.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "antiplan/antiplan.hpp"

namespace fs = std::filesystem;
using namespace antiplan;
using nlohmann::json;

namespace {

std::vector<std::uint64_t> seed_range(std::uint64_t first, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(first + static_cast<std::uint64_t>(i));
  return out;
}

struct EstimatorChoice {
  std::string kind = "exact";
  std::string model_path;
};

bench::EstimatorFactory make_factory(const EstimatorChoice& c, std::shared_ptr<learn::GnnModel>& holder) {
  if (c.kind == "exact") return bench::exact_factory();
  if (c.kind != "learned") throw CLI::ValidationError("--estimator", "must be exact or learned");
  if (c.model_path.empty()) throw CLI::ValidationError("--model", "required with --estimator learned");
  holder = std::make_shared<learn::GnnModel>(learn::load_model(c.model_path));
  auto model = holder;
  return [model](const Environment& env, learn::ExactOracle&) { return search::learned_estimator(*model, env); };
}

WorldState start_state(const Environment& env, const std::string& state_path) {
  if (state_path.empty()) return env.initial_state;
  std::ifstream in(state_path);
  if (!in) throw UnknownEntity("cannot open " + state_path);
  return io::state_from_json(env, json::parse(in));
}

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw UnknownEntity("cannot write " + out);
  f << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anticipatory task planning in procedurally generated blockworlds"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();

  // layout density, shared by every subcommand that generates environments
  GenerationParams layout = bench::BenchConfig::cluttered();
  auto add_layout = [&](CLI::App* sub) {
    sub->add_option("--max-slots", layout.max_slots, "Most slots per region")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--min-objects", layout.min_objects, "Fewest objects per environment")->capture_default_str()->check(CLI::Range(1, layout.max_objects));
  };

  // generate-envs
  auto* gen = app.add_subcommand("generate-envs", "Write env_<seed>.json files");
  add_layout(gen);
  std::uint64_t gen_first = 1;
  int gen_count = 8;
  std::string gen_out = "envs";
  gen->add_option("--first", gen_first, "First environment seed")->capture_default_str();
  gen->add_option("--count", gen_count, "Number of environments")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();

  // gen-data
  auto* gd = app.add_subcommand("gen-data", "Label random states with the exact anticipatory cost");
  add_layout(gd);
  int gd_train = 250, gd_test = 150, gd_states = 200, gd_threads = 0;
  std::string gd_out = "data";
  gd->add_option("--train-envs", gd_train, "Training environments (seeds 1..N)")->capture_default_str()->check(CLI::NonNegativeNumber);
  gd->add_option("--test-envs", gd_test, "Test environments (the next M seeds)")->capture_default_str()->check(CLI::NonNegativeNumber);
  gd->add_option("--states", gd_states, "States per environment")->capture_default_str()->check(CLI::PositiveNumber);
  gd->add_option("--threads", gd_threads, "Worker threads (0: all cores)")->capture_default_str();
  gd->add_option("--out", gd_out, "Output directory for train.jsonl and test.jsonl")->capture_default_str();

  // train
  auto* tr = app.add_subcommand("train", "Fit the graph regressor");
  std::string tr_data = "data/train.jsonl", tr_test, tr_out = "model.json";
  learn::TrainConfig tcfg;
  tr->add_option("--data", tr_data, "Training JSONL")->capture_default_str();
  tr->add_option("--test", tr_test, "Held-out JSONL to report MAE on");
  tr->add_option("--epochs", tcfg.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  tr->add_option("--lr", tcfg.lr)->capture_default_str()->check(CLI::PositiveNumber);
  tr->add_option("--lr-decay", tcfg.lr_decay, "Learning-rate factor applied after each epoch")->capture_default_str()->check(CLI::PositiveNumber);
  tr->add_option("--batch", tcfg.batch)->capture_default_str()->check(CLI::PositiveNumber);
  tr->add_option("--out", tr_out, "Model file")->capture_default_str();

  // solve
  auto* so = app.add_subcommand("solve", "Optimal plan for one task");
  std::string so_env, so_task, so_state, so_out;
  so->add_option("--env", so_env, "Environment JSON")->required();
  so->add_option("--task", so_task, "Directives, e.g. A:red,B:blue")->required();
  so->add_option("--state", so_state, "Start state JSON (default: the environment's initial state)");
  so->add_option("--out", so_out, "Write JSON here instead of stdout");

  // plan
  auto* pl = app.add_subcommand("plan", "Myopic or anticipatory plan for one task");
  std::string pl_env, pl_task, pl_state, pl_mode = "ap", pl_out;
  EstimatorChoice pl_est;
  std::size_t pl_cap = 64;
  pl->add_option("--env", pl_env)->required();
  pl->add_option("--task", pl_task)->required();
  pl->add_option("--state", pl_state);
  pl->add_option("--mode", pl_mode)->capture_default_str()->check(CLI::IsMember({"myopic", "ap"}));
  pl->add_option("--estimator", pl_est.kind)->capture_default_str()->check(CLI::IsMember({"exact", "learned"}));
  pl->add_option("--model", pl_est.model_path);
  pl->add_option("--max-candidates", pl_cap)->capture_default_str()->check(CLI::PositiveNumber);
  pl->add_option("--out", pl_out);

  // prepare
  auto* pr = app.add_subcommand("prepare", "Task-free preparation hill climb");
  std::string pr_env, pr_state, pr_out;
  int pr_iter = 200;
  EstimatorChoice pr_est;
  pr->add_option("--env", pr_env)->required();
  pr->add_option("--state", pr_state);
  pr->add_option("--iterations", pr_iter)->capture_default_str()->check(CLI::PositiveNumber);
  pr->add_option("--estimator", pr_est.kind)->capture_default_str()->check(CLI::IsMember({"exact", "learned"}));
  pr->add_option("--model", pr_est.model_path);
  pr->add_option("--out", pr_out);

  // bench
  auto* be = app.add_subcommand("bench", "Run the four planner configurations over task sequences");
  std::string be_preset = "desk", be_out = "bench.csv", be_config;
  EstimatorChoice be_est;
  std::vector<std::string> be_modes;
  int be_envs = 0, be_seqs = 0, be_tasks = 0, be_threads = 0, be_iter = 200;
  bool be_timing = false, be_charge = false, be_fresh = false;
  be->add_option("--preset", be_preset)->capture_default_str()->check(CLI::IsMember({"desk", "paper"}));
  be->add_option("--config", be_config, "JSON config file; flags override it");
  be->add_option("--estimator", be_est.kind)->capture_default_str()->check(CLI::IsMember({"exact", "learned"}));
  be->add_option("--model", be_est.model_path);
  be->add_option("--out", be_out)->capture_default_str();
  be->add_option("--envs", be_envs, "Environment count (seeds 1..N)")->check(CLI::NonNegativeNumber);
  be->add_option("--sequences", be_seqs)->check(CLI::NonNegativeNumber);
  be->add_option("--tasks", be_tasks)->check(CLI::NonNegativeNumber);
  be->add_option("--configs", be_modes, "Subset of myopic, ap, prep+myopic, prep+ap");
  be->add_option("--prep-iterations", be_iter)->capture_default_str()->check(CLI::PositiveNumber);
  be->add_option("--threads", be_threads, "Worker threads (0: all cores, capped by ANTIPLAN_THREADS)");
  be->add_flag("--record-timing", be_timing, "Fill wall_ms (breaks byte-identical output)");
  be->add_flag("--charge-prep", be_charge, "Charge preparation actions to the first task");
  be->add_flag("--fresh", be_fresh, "Ignore an existing CSV instead of resuming");
  add_layout(be);

  // summarize
  auto* su = app.add_subcommand("summarize", "Per-configuration means from a benchmark CSV");
  std::string su_csv = "bench.csv";
  bool su_json = false;
  su->add_option("csv", su_csv)->capture_default_str();
  su->add_flag("--json", su_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help() << '\n';
    return 1;
  }

  try {
    if (*gen) {
      fs::create_directories(gen_out);
      for (auto s : seed_range(gen_first, gen_count)) {
        const auto env = generate_environment(s, layout);
        const auto path = (fs::path(gen_out) / io::environment_filename(s)).string();
        io::save_environment(env, path);
        std::cout << path << '\n';
      }
    } else if (*gd) {
      fs::create_directories(gd_out);
      const auto [train_seeds, test_seeds] = learn::split_seeds(gd_train, gd_test);
      learn::DatasetConfig c;
      c.states_per_env = gd_states;
      c.seed = seed;
      c.threads = gd_threads;
      c.generation = layout;
      for (const auto& [name, seeds] : {std::pair{"train.jsonl", train_seeds}, std::pair{"test.jsonl", test_seeds}}) {
        if (seeds.empty()) continue;
        c.env_seeds = seeds;
        const auto data = learn::generate_dataset(c);
        const auto path = (fs::path(gd_out) / name).string();
        learn::write_dataset(data, path);
        std::cout << path << ": " << data.size() << " states\n";
      }
    } else if (*tr) {
      tcfg.seed = seed;
      const auto data = learn::read_dataset(tr_data);
      const auto r = learn::train(data, tcfg);
      learn::save_model(r.model, tr_out);
      for (std::size_t e = 0; e < r.loss_history.size(); ++e) std::printf("epoch %zu  train MAE %.3f\n", e + 1, r.loss_history[e]);
      if (!tr_test.empty()) {
        const auto test = learn::read_dataset(tr_test);
        double mean = 0.0, cmae = 0.0, lmean = 0.0;
        for (const auto& d : data) mean += d.label / static_cast<double>(data.size());
        for (const auto& d : test) {
          cmae += std::abs(d.label - mean) / static_cast<double>(test.size());
          lmean += d.label / static_cast<double>(test.size());
        }
        const double mae = learn::mean_absolute_error(r.model, test);
        std::printf("test MAE %.3f  constant-mean MAE %.3f  relative %.4f\n", mae, cmae, lmean > 0 ? mae / lmean : 0.0);
      }
    } else if (*so) {
      const auto env = io::load_environment(so_env);
      const auto task = parse_task(env, so_task);
      planner::TaskSolver solver(env);
      const auto p = solver.plan_task(start_state(env, so_state), task);
      if (!p) throw UnsolvableTask("task " + so_task + " has no plan");
      auto j = io::plan_json(env, *p);
      j["final_state"] = io::state_json(env, p->final_state);
      emit(j, so_out);
    } else if (*pl) {
      const auto env = io::load_environment(pl_env);
      const auto task = parse_task(env, pl_task);
      const auto s0 = start_state(env, pl_state);
      learn::ExactOracle oracle(env);
      std::shared_ptr<learn::GnnModel> holder;
      const auto est = make_factory(pl_est, holder)(env, oracle);
      json j;
      if (pl_mode == "myopic") {
        const auto p = oracle.solver().plan_task(s0, task);
        if (!p) throw UnsolvableTask("task " + pl_task + " has no plan");
        const Cost future = est(p->final_state);
        j = {{"mode", "myopic"},
             {"plan", io::plan_json(env, *p)},
             {"goal", io::state_json(env, p->final_state)},
             {"immediate", p->cost},
             {"future", future},
             {"total", p->cost + future},
             {"myopic_total", p->cost + future},
             {"candidates_evaluated", 1}};
      } else {
        const auto r = search::anticipatory_plan(oracle.solver(), s0, task, est, pl_cap);
        j = {{"mode", "ap"},
             {"plan", io::plan_json(env, r.plan)},
             {"goal", io::state_json(env, r.goal)},
             {"immediate", r.immediate},
             {"future", r.future},
             {"total", r.total},
             {"myopic_total", r.myopic_total},
             {"candidates_evaluated", r.candidates_evaluated}};
      }
      emit(j, pl_out);
    } else if (*pr) {
      const auto env = io::load_environment(pr_env);
      learn::ExactOracle oracle(env);
      std::shared_ptr<learn::GnnModel> holder;
      const auto est = make_factory(pr_est, holder)(env, oracle);
      Rng rng(derive_seed(seed, env.seed, 0x707265ULL));
      const auto s0 = start_state(env, pr_state);
      const auto r = search::prepare(oracle.solver(), s0, est, pr_iter, rng);
      emit({{"state", io::state_json(env, r.state)},
            {"initial_value", est(s0)},
            {"value", r.value},
            {"adopted", r.adopted},
            {"skipped", r.skipped},
            {"action_cost", r.action_cost}},
           pr_out);
    } else if (*be) {
      auto cfg = be_preset == "paper" ? bench::BenchConfig::paper() : bench::BenchConfig::desk();
      if (!be_config.empty()) {
        std::ifstream in(be_config);
        if (!in) throw UnknownEntity("cannot open " + be_config);
        const json j = json::parse(in);
        if (j.contains("envs")) cfg.env_seeds = seed_range(1, j["envs"].get<int>());
        if (j.contains("env_seeds")) cfg.env_seeds = j["env_seeds"].get<std::vector<std::uint64_t>>();
        cfg.sequences_per_env = j.value("sequences_per_env", cfg.sequences_per_env);
        cfg.tasks_per_sequence = j.value("tasks_per_sequence", cfg.tasks_per_sequence);
        cfg.prep_iterations = j.value("prep_iterations", cfg.prep_iterations);
        cfg.max_candidates = j.value("max_candidates", cfg.max_candidates);
        cfg.charge_prep = j.value("charge_prep", cfg.charge_prep);
        cfg.generation.max_slots = j.value("max_slots", cfg.generation.max_slots);
        cfg.generation.min_objects = j.value("min_objects", cfg.generation.min_objects);
        if (j.contains("configs")) {
          cfg.modes.clear();
          for (const auto& m : j["configs"]) cfg.modes.push_back(bench::parse_mode(m.get<std::string>()));
        }
        if (j.contains("estimator")) be_est.kind = j["estimator"].get<std::string>();
        if (j.contains("model")) be_est.model_path = j["model"].get<std::string>();
      }
      cfg.seed = seed;
      if (be_envs > 0) cfg.env_seeds = seed_range(1, be_envs);
      if (be_seqs > 0) cfg.sequences_per_env = be_seqs;
      if (be_tasks > 0) cfg.tasks_per_sequence = be_tasks;
      if (!be_modes.empty()) {
        cfg.modes.clear();
        for (const auto& m : be_modes) cfg.modes.push_back(bench::parse_mode(m));
      }
      cfg.prep_iterations = be->count("--prep-iterations") ? be_iter : cfg.prep_iterations;
      if (be->count("--max-slots")) cfg.generation.max_slots = layout.max_slots;
      if (be->count("--min-objects")) cfg.generation.min_objects = layout.min_objects;
      cfg.threads = be_threads;
      cfg.record_timing = be_timing;
      cfg.charge_prep = cfg.charge_prep || be_charge;
      std::shared_ptr<learn::GnnModel> holder;
      const auto factory = make_factory(be_est, holder);
      const auto recs = bench::run_benchmark(cfg, be_out, factory, !be_fresh,
                                             [](std::uint64_t s) { std::fprintf(stderr, "environment %llu done\n", static_cast<unsigned long long>(s)); });
      std::cout << bench::format_summary(bench::summarize(recs));
    } else if (*su) {
      const auto s = bench::summarize(bench::read_csv(su_csv));
      if (su_json) {
        json j = json::array();
        for (const auto& m : s.modes)
          j.push_back({{"config", bench::mode_name(m.mode)},
                       {"mean_cost", m.mean},
                       {"improvement_vs_myopic", m.improvement},
                       {"per_index", m.per_index},
                       {"slope", m.slope},
                       {"records", m.count}});
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << bench::format_summary(s);
      }
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "antiplan: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "antiplan: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
