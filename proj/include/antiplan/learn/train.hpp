#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "antiplan/learn/model.hpp"

namespace antiplan::learn {

struct TrainingDatum {
  StateGraph graph;
  Cost label = 0.0;
  std::uint64_t env_seed = 0;
};

struct TrainConfig {
  int epochs = 10;
  double lr = 0.01;
  double lr_decay = 1.0;  // multiplies lr after every epoch
  int batch = 8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
};

struct TrainResult {
  GnnModel model;
  std::vector<double> loss_history;  // mean training MAE per epoch, cost units
};

/// Mean absolute error of the scaled prediction over a batch and its
/// gradient. Labels are divided by the model's label scale.
inline double batch_loss(const GnnModel& m, const std::vector<const PreparedGraph*>& graphs, const std::vector<double>& labels,
                         GnnModel* grad) {
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto t = forward_trace(m, *graphs[i]);
    const double err = t.raw - labels[i] / m.label_scale;
    loss += std::abs(err) * inv;
    if (grad) {
      const double sign = err > 0.0 ? 1.0 : err < 0.0 ? -1.0 : 0.0;
      if (sign != 0.0) backward(m, *graphs[i], t, sign * inv, *grad);
    }
  }
  return loss;
}

class Adam {
 public:
  Adam(const GnnModel& shape, const TrainConfig& cfg) : cfg_(cfg) {
    const auto n = shape.num_parameters();
    m_.assign(n, 0.0);
    v_.assign(n, 0.0);
  }

  void set_learning_rate(double lr) { cfg_.lr = lr; }
  double learning_rate() const { return cfg_.lr; }

  void step(GnnModel& model, GnnModel& grad) {
    ++t_;
    std::vector<double*> g;
    grad.for_each_parameter([&](double& x) { g.push_back(&x); });
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::size_t i = 0;
    model.for_each_parameter([&](double& p) {
      const double gi = *g[i];
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * gi;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * gi * gi;
      p -= cfg_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
      ++i;
    });
  }

 private:
  TrainConfig cfg_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

inline GnnModel zero_like(const GnnModel& m) {
  GnnModel z = m;
  z.for_each_parameter([](double& x) { x = 0.0; });
  return z;
}

/// Adam on mean absolute error. Labels are scaled by their training mean;
/// the scale is stored in the model so outputs stay in cost units.
inline TrainResult train(const std::vector<TrainingDatum>& data, const TrainConfig& cfg = {}) {
  if (data.empty()) throw DimensionMismatch("no training data");
  if (cfg.epochs < 1 || cfg.batch < 1 || !(cfg.lr > 0.0) || !(cfg.lr_decay > 0.0)) throw DimensionMismatch("invalid training configuration");
  Rng rng(derive_seed(cfg.seed, 0x747261ULL));
  TrainResult r;
  r.model = GnnModel::random(rng);
  double mean = 0.0;
  for (const auto& d : data) mean += d.label / static_cast<double>(data.size());
  r.model.label_scale = mean > 0.0 ? mean : 1.0;

  std::vector<PreparedGraph> graphs;
  graphs.reserve(data.size());
  for (const auto& d : data) graphs.push_back(prepare_graph(d.graph));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Adam opt(r.model, cfg);
  for (int e = 0; e < cfg.epochs; ++e) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch));
      std::vector<const PreparedGraph*> gs;
      std::vector<double> ls;
      for (std::size_t k = b; k < end; ++k) {
        gs.push_back(&graphs[order[k]]);
        ls.push_back(data[order[k]].label);
      }
      GnnModel grad = zero_like(r.model);
      const double loss = batch_loss(r.model, gs, ls, &grad);
      if (!std::isfinite(loss) || !grad.finite())
        throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(e + 1) + ", batch " + std::to_string(b / cfg.batch + 1));
      opt.step(r.model, grad);
      total += loss * static_cast<double>(end - b);
    }
    r.loss_history.push_back(total / static_cast<double>(order.size()) * r.model.label_scale);
    opt.set_learning_rate(opt.learning_rate() * cfg.lr_decay);
  }
  if (!r.model.finite()) throw NonFiniteLoss("training produced non-finite parameters");
  return r;
}

/// Anticipatory cost estimate, never negative.
inline Cost estimate(const GnnModel& m, const Environment& env, const WorldState& s) {
  return std::max(0.0, forward(m, encode_state(env, s)));
}

inline double mean_absolute_error(const GnnModel& m, const std::vector<TrainingDatum>& data) {
  double e = 0.0;
  for (const auto& d : data) e += std::abs(std::max(0.0, forward(m, d.graph)) - d.label);
  return data.empty() ? 0.0 : e / static_cast<double>(data.size());
}

}  // namespace antiplan::learn
