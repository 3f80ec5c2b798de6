#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <numeric>

#include "antiplan/generate.hpp"
#include "antiplan/learn/dataset.hpp"
#include "antiplan/learn/exact.hpp"
#include "antiplan/learn/train.hpp"
#include "fixtures.hpp"

using namespace antiplan;
using namespace antiplan::learn;

namespace {

Environment two_by_two_two() {
  return fixtures::make_env({{"red", Color::red, 2, {1, 1}}, {"blue", Color::blue, 2, {6, 1}}},
                            {{"A", Color::red}, {"B", Color::blue}}, {"red_s1", "blue_s2"}, "red", {"A:blue", "B:red"});
}

StateGraph three_nodes() {
  StateGraph g;
  g.nodes.push_back(make_feature(EntityType::room, {0, 0, 0, 0}, {0.5, 0.5}));
  g.nodes.push_back(make_feature(EntityType::location, {1, 0, 0, 1}, {0.2, 0.7}));
  g.nodes.push_back(make_feature(EntityType::object, {0, 0, 1, 1}, {0.3, 0.9}));
  g.edges = {{0, 1}, {1, 2}};
  return g;
}

StateGraph permuted(const StateGraph& g, const std::vector<int>& perm) {
  StateGraph p;
  p.nodes.resize(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) p.nodes[perm[i]] = g.nodes[i];
  for (const auto& [a, b] : g.edges) p.edges.emplace_back(perm[a], perm[b]);
  return p;
}

double loss_of(const GnnModel& m, const PreparedGraph& g, double label) {
  return batch_loss(m, {&g}, {label}, nullptr);
}

}  // namespace

// ---- state graph ----

TEST(EncodeState, CountsMatchEnumeration) {
  const auto env = two_by_two_two();
  const auto g = encode_state(env, env.initial_state);
  // independent count: one env node, every region, every slot, every object
  std::size_t nodes = 1 + env.regions.size(), edges = env.regions.size();
  for (const auto& r : env.regions) {
    nodes += r.slots.size();
    edges += r.slots.size();
  }
  for (int p : env.initial_state.placements) {
    ++nodes;
    edges += p != kNone;
  }
  EXPECT_EQ(nodes, 9u);
  EXPECT_EQ(edges, 8u);
  EXPECT_EQ(g.nodes.size(), nodes);
  EXPECT_EQ(g.edges.size(), edges);
}

TEST(EncodeState, FeatureLayout) {
  const auto env = two_by_two_two();
  const auto g = encode_state(env, env.initial_state);
  // objects come last, ordered by id: A (red) then B (blue)
  const auto& b = g.nodes[8];
  EXPECT_EQ(b[2], 1.0);
  EXPECT_EQ(b[3], 0.0);
  EXPECT_EQ(b[4], 0.0);
  EXPECT_EQ(b[5], 1.0);
  EXPECT_EQ(b[6], 1.0);
  for (const auto& f : g.nodes) {
    EXPECT_EQ(f[0] + f[1] + f[2], 1.0);
    for (int i = 3; i < 9; ++i) {
      EXPECT_GE(f[i], 0.0);
      EXPECT_LE(f[i], 1.0);
    }
  }
  EXPECT_EQ(g.nodes[0][0], 1.0);
  EXPECT_EQ(encode_state(env, env.initial_state), g);
}

TEST(EncodeState, HeldObjectHangsOffEnvironmentNode) {
  const auto env = two_by_two_two();
  const auto s = apply_action(env, env.initial_state, WorldAction::pick(0, env.slot_index("red_s1")));
  const auto g = encode_state(env, s);
  EXPECT_EQ(g.nodes.size(), 9u);
  std::vector<int> degree(g.nodes.size());
  for (const auto& [a, c] : g.edges) {
    ++degree[a];
    ++degree[c];
  }
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (g.nodes[i][2] == 1.0) {
      EXPECT_GE(degree[i], 1);
    }
  EXPECT_NE(std::find(g.edges.begin(), g.edges.end(), std::pair{0, 7}), g.edges.end());
}

TEST(EncodeState, EdgesOnlyJoinContainerAndContained) {
  const auto env = generate_environment(7);
  Rng rng(1);
  const auto g = encode_state(env, random_state(env, rng));
  int rooms = 0;
  for (const auto& f : g.nodes) rooms += f[0] == 1.0;
  EXPECT_EQ(rooms, 1);
  for (const auto& [a, b] : g.edges) {
    EXPECT_LT(a, b);  // container precedes contained in node order
    EXPECT_NE(g.nodes[b][0], 1.0);
    EXPECT_NE(g.nodes[a][2], 1.0);
  }
}

// ---- exact oracle ----

TEST(ExactOracle, AllSatisfiedIsZero) {
  auto env = two_by_two_two();
  env.task_distribution = TaskDistribution::uniform({parse_task(env, "A:red"), parse_task(env, "B:blue")});
  EXPECT_EQ(exact_anticipatory_cost(env, env.initial_state), 0.0);
}

TEST(ExactOracle, TwoEquiprobableTasks) {
  const auto env = two_by_two_two();
  const Cost c1 = planner::optimal_cost(env, env.initial_state, parse_task(env, "A:blue"));
  const Cost c2 = planner::optimal_cost(env, env.initial_state, parse_task(env, "B:red"));
  EXPECT_DOUBLE_EQ(exact_anticipatory_cost(env, env.initial_state), (c1 + c2) / 2);
}

TEST(ExactOracle, LinearInDistribution) {
  const auto base = generate_environment(7);
  const auto& entries = base.task_distribution.entries;
  auto p = base, q = base, mix = base;
  const std::size_t half = entries.size() / 2;
  p.task_distribution = TaskDistribution::uniform({});
  q.task_distribution = TaskDistribution::uniform({});
  p.task_distribution.entries.clear();
  q.task_distribution.entries.clear();
  for (std::size_t i = 0; i < entries.size(); ++i) (i < half ? p : q).task_distribution.entries.push_back({entries[i].task, 0.0});
  for (auto* d : {&p, &q})
    for (auto& e : d->task_distribution.entries) e.probability = 1.0 / d->task_distribution.entries.size();
  const double lambda = 0.3;
  mix.task_distribution.entries.clear();
  for (const auto& e : p.task_distribution.entries) mix.task_distribution.entries.push_back({e.task, lambda * e.probability});
  for (const auto& e : q.task_distribution.entries) mix.task_distribution.entries.push_back({e.task, (1 - lambda) * e.probability});
  ASSERT_TRUE(mix.task_distribution.valid());
  Rng rng(2);
  const auto s = random_state(base, rng);
  EXPECT_NEAR(exact_anticipatory_cost(mix, s), lambda * exact_anticipatory_cost(p, s) + (1 - lambda) * exact_anticipatory_cost(q, s), 1e-9);
}

TEST(ExactOracle, MonteCarloAgrees) {
  const auto env = generate_environment(5);
  Rng rng(9);
  const auto s = random_state(env, rng);
  ExactOracle oracle(env);
  const Cost exact = oracle(s);
  planner::TaskSolver solver(env);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += *solver.task_cost(s, sample_task(env.task_distribution, rng));
  EXPECT_NEAR(sum / n, exact, 0.02 * exact);
}

TEST(ExactOracle, BoundedEvaluation) {
  const auto env = generate_environment(6);
  ExactOracle oracle(env), fresh(env);
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    const auto s = random_state(env, rng);
    const Cost v = fresh(s);
    const auto above = oracle.evaluate(s, v + 1.0);
    ASSERT_TRUE(above);
    EXPECT_EQ(*above, v);
    EXPECT_FALSE(oracle.evaluate(s, v - 1.0).has_value());
    EXPECT_EQ(*oracle.evaluate(s, kInfiniteCost), v);
  }
}

TEST(ExactOracle, PenaltyForUnsolvableTask) {
  // two objects, each task wants both in the single-slot red region
  auto env = fixtures::make_env({{"red", Color::red, 1, {1, 1}}, {"blue", Color::blue, 3, {4, 5}}},
                                {{"A", Color::red}, {"B", Color::red}}, {"blue_s1", "blue_s2"}, "blue", {"A:red", "A:red,B:red"});
  ExactOracle oracle(env);
  const Cost solvable = planner::optimal_cost(env, env.initial_state, parse_task(env, "A:red"));
  EXPECT_EQ(oracle.penalty(), 10 * solvable);
  EXPECT_DOUBLE_EQ(oracle(env.initial_state), 0.5 * solvable + 0.5 * 10 * solvable);
  EXPECT_GE(oracle.penalties_used(), 1u);
}

// ---- model ----

TEST(Model, ZeroWeightsGiveZero) {
  const auto m = GnnModel::zeros();
  EXPECT_EQ(forward(m, three_nodes()), 0.0);
  EXPECT_EQ(forward(m, encode_state(generate_environment(7), generate_environment(7).initial_state)), 0.0);
  EXPECT_EQ(m.dims(), (std::vector<int>{9, 32, 32, 32, 1}));
}

TEST(Model, PermutationInvariance) {
  Rng rng(5);
  const auto m = GnnModel::random(rng);
  const auto env = generate_environment(7);
  const auto g = encode_state(env, env.initial_state);
  const double base = forward(m, g);
  std::vector<int> perm(g.nodes.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = 0; i < 100; ++i) {
    rng.shuffle(perm);
    ASSERT_NEAR(forward(m, permuted(g, perm)), base, 1e-9);
  }
  StateGraph flipped = g;
  std::reverse(flipped.edges.begin(), flipped.edges.end());
  for (auto& e : flipped.edges) std::swap(e.first, e.second);
  EXPECT_EQ(forward(m, flipped), base);
}

TEST(Model, IsolatedNodeHasZeroMessage) {
  StateGraph g = three_nodes();
  g.edges.clear();
  const auto p = prepare_graph(g);
  const auto a = aggregate(p.nbrs, p.x);
  EXPECT_EQ(a.norm(), 0.0);
}

TEST(Model, WrongFeatureWidth) {
  Rng rng(1);
  const auto m = GnnModel::random(rng, {5, 8, 1});
  EXPECT_THROW(forward(m, three_nodes()), DimensionMismatch);
  StateGraph bad = three_nodes();
  bad.edges.push_back({0, 9});
  EXPECT_THROW(prepare_graph(bad), DimensionMismatch);
}

TEST(Model, GradientMatchesFiniteDifferences) {
  Rng rng(17);
  GnnModel m = GnnModel::random(rng);
  m.label_scale = 50.0;
  // nonzero biases so every parameter gets exercised
  for (auto& l : m.layers)
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = rng.uniform(-0.1, 0.1);
  const auto g = prepare_graph(three_nodes());
  const double label = 300.0;  // keeps the error away from the kink of |.|
  GnnModel grad = zero_like(m);
  batch_loss(m, {&g}, {label}, &grad);
  std::vector<double> analytic;
  grad.for_each_parameter([&](double& x) { analytic.push_back(x); });
  const double h = 1e-5;
  std::size_t k = 0, worst_index = 0;
  double worst = 0.0;
  m.for_each_parameter([&](double& p) {
    const double keep = p;
    p = keep + h;
    const double up = loss_of(m, g, label);
    p = keep - h;
    const double down = loss_of(m, g, label);
    p = keep;
    const double numeric = (up - down) / (2 * h);
    const double rel = std::abs(numeric - analytic[k]) / std::max({std::abs(numeric), std::abs(analytic[k]), 1e-6});
    if (rel > worst) {
      worst = rel;
      worst_index = k;
    }
    ++k;
  });
  EXPECT_EQ(k, m.num_parameters());
  EXPECT_LT(worst, 1e-4) << "parameter " << worst_index;
}

TEST(Model, MemorizesOneGraph) {
  const auto env = generate_environment(7);
  TrainingDatum d{encode_state(env, env.initial_state), 420.0, 7};
  Rng rng(3);
  GnnModel m = GnnModel::random(rng);
  m.label_scale = d.label;
  const auto g = prepare_graph(d.graph);
  TrainConfig cfg;
  cfg.lr = 0.01;
  Adam opt(m, cfg);
  // an absolute-error loss never settles under a fixed step size
  for (int i = 0; i < 200; ++i) {
    GnnModel grad = zero_like(m);
    batch_loss(m, {&g}, {d.label}, &grad);
    opt.step(m, grad);
    opt.set_learning_rate(opt.learning_rate() * 0.97);
  }
  EXPECT_LT(std::abs(forward(m, g) - d.label), 0.01 * d.label);
}

TEST(Model, JsonRoundTrip) {
  Rng rng(8);
  GnnModel m = GnnModel::random(rng);
  m.label_scale = 123.5;
  const auto path = (std::filesystem::temp_directory_path() / "antiplan_model_rt.json").string();
  save_model(m, path);
  const auto back = load_model(path);
  EXPECT_EQ(to_json(back).dump(), to_json(m).dump());
  EXPECT_EQ(forward(back, three_nodes()), forward(m, three_nodes()));
  std::remove(path.c_str());
  auto j = to_json(m);
  j["format"] = "something-else";
  EXPECT_ANY_THROW(model_from_json(j));
}

TEST(Estimate, ClampsAtZero) {
  const auto env = generate_environment(7);
  GnnModel m = GnnModel::zeros();
  m.readout_bias = -2.0;
  EXPECT_EQ(estimate(m, env, env.initial_state), 0.0);
  m.readout_bias = 3.0;
  m.label_scale = 10.0;
  EXPECT_EQ(estimate(m, env, env.initial_state), forward(m, encode_state(env, env.initial_state)));
  EXPECT_EQ(estimate(m, env, env.initial_state), 30.0);
}

// ---- training ----

class SmallDataset : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    DatasetConfig c;
    c.states_per_env = 20;
    c.seed = 1;
    for (std::uint64_t s = 1; s <= 6; ++s) c.env_seeds.push_back(s);
    train_ = new std::vector<TrainingDatum>(generate_dataset(c));
    c.env_seeds = {11, 12};
    test_ = new std::vector<TrainingDatum>(generate_dataset(c));
  }
  static void TearDownTestSuite() {
    delete train_;
    delete test_;
  }
  static std::vector<TrainingDatum>* train_;
  static std::vector<TrainingDatum>* test_;
};
std::vector<TrainingDatum>* SmallDataset::train_ = nullptr;
std::vector<TrainingDatum>* SmallDataset::test_ = nullptr;

TEST_F(SmallDataset, ShapesAndLabels) {
  EXPECT_EQ(train_->size(), 120u);
  EXPECT_EQ(test_->size(), 40u);
  for (const auto& d : *train_) {
    EXPECT_GE(d.label, 0.0);
    EXPECT_GE(d.env_seed, 1u);
    EXPECT_LE(d.env_seed, 6u);
  }
  EXPECT_EQ(train_->front().env_seed, 1u);
  EXPECT_EQ(train_->back().env_seed, 6u);
}

TEST_F(SmallDataset, RelabelingReproducesLabels) {
  const auto env = generate_environment(3);
  const auto again = label_environment(env, 20, 1);
  std::vector<TrainingDatum> stored;
  for (const auto& d : *train_)
    if (d.env_seed == 3) stored.push_back(d);
  ASSERT_EQ(stored.size(), again.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    EXPECT_EQ(stored[i].label, again[i].label);
    EXPECT_EQ(stored[i].graph, again[i].graph);
  }
}

TEST_F(SmallDataset, FitsBetterThanConstantAndLossFalls) {
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.lr_decay = 0.9;
  const auto r = train(*train_, cfg);
  ASSERT_EQ(r.loss_history.size(), 30u);
  const auto& h = r.loss_history;
  EXPECT_LT(std::accumulate(h.end() - 5, h.end(), 0.0), std::accumulate(h.begin(), h.begin() + 5, 0.0));
  double mean = 0.0;
  for (const auto& d : *train_) mean += d.label / train_->size();
  double constant = 0.0;
  for (const auto& d : *train_) constant += std::abs(d.label - mean) / train_->size();
  EXPECT_LT(mean_absolute_error(r.model, *train_), constant);
  EXPECT_NEAR(r.model.label_scale, mean, 1e-9 * mean);
}

TEST_F(SmallDataset, TrainingIsDeterministic) {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 4;
  const auto a = train(*train_, cfg), b = train(*train_, cfg);
  EXPECT_EQ(to_json(a.model).dump(), to_json(b.model).dump());
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST_F(SmallDataset, JsonlRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "antiplan_data_rt.jsonl").string();
  write_dataset(*test_, path);
  const auto back = read_dataset(path);
  ASSERT_EQ(back.size(), test_->size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].label, (*test_)[i].label);
    EXPECT_EQ(back[i].graph, (*test_)[i].graph);
    EXPECT_EQ(back[i].env_seed, (*test_)[i].env_seed);
  }
  std::remove(path.c_str());
}

TEST(Train, NonFiniteLossAborts) {
  const auto env = generate_environment(7);
  std::vector<TrainingDatum> data{{encode_state(env, env.initial_state), std::nan(""), 7}, {encode_state(env, env.initial_state), 5.0, 7}};
  EXPECT_THROW(train(data), NonFiniteLoss);
  EXPECT_THROW(train({}), DimensionMismatch);
}

TEST(Dataset, DefaultSplit) {
  const auto [train_seeds, test_seeds] = split_seeds();
  EXPECT_EQ(train_seeds.size(), 250u);
  EXPECT_EQ(test_seeds.size(), 150u);
  EXPECT_EQ(train_seeds.front(), 1u);
  EXPECT_EQ(test_seeds.front(), 251u);
  EXPECT_EQ(train_seeds.size() * DatasetConfig{}.states_per_env, 50000u);
}
