#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "antiplan/common.hpp"
#include "antiplan/learn/state_graph.hpp"

namespace antiplan::learn {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

inline constexpr double kLeakySlope = 0.01;

/// Node features as a matrix plus undirected neighbor lists.
struct PreparedGraph {
  MatrixXd x;
  std::vector<std::vector<int>> nbrs;
};

inline PreparedGraph prepare_graph(const StateGraph& g) {
  PreparedGraph p;
  const auto n = static_cast<Eigen::Index>(g.nodes.size());
  p.x.resize(n, kFeatureDim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < kFeatureDim; ++j) p.x(i, j) = g.nodes[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  p.nbrs.resize(g.nodes.size());
  for (const auto& [a, b] : g.edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw DimensionMismatch("edge references a missing node");
    p.nbrs[static_cast<std::size_t>(a)].push_back(b);
    p.nbrs[static_cast<std::size_t>(b)].push_back(a);
  }
  // neighbor order only affects rounding; fix it
  for (auto& l : p.nbrs) std::sort(l.begin(), l.end());
  return p;
}

/// Mean of neighbor rows; zero for isolated nodes.
inline MatrixXd aggregate(const std::vector<std::vector<int>>& nbrs, const MatrixXd& h) {
  MatrixXd out = MatrixXd::Zero(h.rows(), h.cols());
  for (std::size_t v = 0; v < nbrs.size(); ++v) {
    if (nbrs[v].empty()) continue;
    for (int u : nbrs[v]) out.row(static_cast<Eigen::Index>(v)) += h.row(u);
    out.row(static_cast<Eigen::Index>(v)) /= static_cast<double>(nbrs[v].size());
  }
  return out;
}

/// Transpose of aggregate: scatters each node's gradient back to its
/// neighbors.
inline MatrixXd aggregate_transpose(const std::vector<std::vector<int>>& nbrs, const MatrixXd& g) {
  MatrixXd out = MatrixXd::Zero(g.rows(), g.cols());
  for (std::size_t v = 0; v < nbrs.size(); ++v) {
    if (nbrs[v].empty()) continue;
    const double w = 1.0 / static_cast<double>(nbrs[v].size());
    for (int u : nbrs[v]) out.row(u) += w * g.row(static_cast<Eigen::Index>(v));
  }
  return out;
}

struct GnnLayer {
  MatrixXd w_self;  // d_in x d_out
  MatrixXd w_nbr;   // d_in x d_out
  VectorXd bias;    // d_out
};

/// Three mean-aggregation message-passing layers with leaky ReLU, mean
/// pooling and a linear readout. Outputs are in cost units: the readout is
/// multiplied by label_scale.
struct GnnModel {
  std::vector<GnnLayer> layers;
  VectorXd readout;
  double readout_bias = 0.0;
  double label_scale = 1.0;

  static GnnModel zeros(const std::vector<int>& dims = {kFeatureDim, 32, 32, 32}) {
    GnnModel m;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
      m.layers.push_back({MatrixXd::Zero(dims[l], dims[l + 1]), MatrixXd::Zero(dims[l], dims[l + 1]), VectorXd::Zero(dims[l + 1])});
    m.readout = VectorXd::Zero(dims.back());
    return m;
  }

  /// Glorot-uniform weights, zero biases.
  static GnnModel random(Rng& rng, const std::vector<int>& dims = {kFeatureDim, 32, 32, 32}) {
    GnnModel m = zeros(dims);
    auto fill = [&](MatrixXd& w) {
      const double lim = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-lim, lim);
    };
    for (auto& l : m.layers) {
      fill(l.w_self);
      fill(l.w_nbr);
    }
    const double lim = std::sqrt(6.0 / static_cast<double>(m.readout.size() + 1));
    for (Eigen::Index i = 0; i < m.readout.size(); ++i) m.readout(i) = rng.uniform(-lim, lim);
    return m;
  }

  std::vector<int> dims() const {
    std::vector<int> d;
    if (layers.empty()) return d;
    d.push_back(static_cast<int>(layers.front().w_self.rows()));
    for (const auto& l : layers) d.push_back(static_cast<int>(l.w_self.cols()));
    d.push_back(1);
    return d;
  }

  std::size_t num_parameters() const {
    std::size_t n = static_cast<std::size_t>(readout.size()) + 1;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.w_self.size() + l.w_nbr.size() + l.bias.size());
    return n;
  }

  /// Visits every parameter in a fixed order.
  template <typename F>
  void for_each_parameter(F&& f) {
    for (auto& l : layers) {
      for (Eigen::Index i = 0; i < l.w_self.size(); ++i) f(l.w_self.data()[i]);
      for (Eigen::Index i = 0; i < l.w_nbr.size(); ++i) f(l.w_nbr.data()[i]);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) f(l.bias.data()[i]);
    }
    for (Eigen::Index i = 0; i < readout.size(); ++i) f(readout.data()[i]);
    f(readout_bias);
  }

  bool finite() const {
    bool ok = std::isfinite(readout_bias) && std::isfinite(label_scale) && readout.allFinite();
    for (const auto& l : layers) ok = ok && l.w_self.allFinite() && l.w_nbr.allFinite() && l.bias.allFinite();
    return ok;
  }
};

inline double leaky(double z) { return z > 0.0 ? z : kLeakySlope * z; }
inline double leaky_grad(double z) { return z > 0.0 ? 1.0 : kLeakySlope; }

/// Per-layer values kept for the backward pass.
struct ForwardTrace {
  std::vector<MatrixXd> inputs;      // H_l
  std::vector<MatrixXd> aggregated;  // mean of neighbors of H_l
  std::vector<MatrixXd> pre;         // Z_l
  RowVectorXd pooled;
  double raw = 0.0;  // readout before label scaling
};

inline ForwardTrace forward_trace(const GnnModel& m, const PreparedGraph& g) {
  if (m.layers.empty() || g.x.cols() != m.layers.front().w_self.rows())
    throw DimensionMismatch("node features have " + std::to_string(g.x.cols()) + " columns, model expects " +
                            std::to_string(m.layers.empty() ? 0 : m.layers.front().w_self.rows()));
  if (g.x.rows() == 0) throw DimensionMismatch("graph has no nodes");
  ForwardTrace t;
  MatrixXd h = g.x;
  for (const auto& l : m.layers) {
    MatrixXd a = aggregate(g.nbrs, h);
    MatrixXd z = h * l.w_self + a * l.w_nbr;
    z.rowwise() += l.bias.transpose();
    t.inputs.push_back(std::move(h));
    t.aggregated.push_back(std::move(a));
    h = z.unaryExpr([](double v) { return leaky(v); });
    t.pre.push_back(std::move(z));
  }
  t.pooled = h.colwise().mean();
  t.raw = t.pooled.dot(m.readout) + m.readout_bias;
  return t;
}

inline double forward(const GnnModel& m, const PreparedGraph& g) { return forward_trace(m, g).raw * m.label_scale; }
inline double forward(const GnnModel& m, const StateGraph& g) { return forward(m, prepare_graph(g)); }

/// Accumulates d(raw output)/d(parameters) times `upstream` into `grad`,
/// which must have the model's shape.
inline void backward(const GnnModel& m, const PreparedGraph& g, const ForwardTrace& t, double upstream, GnnModel& grad) {
  const auto n = static_cast<double>(g.x.rows());
  grad.readout += upstream * t.pooled.transpose();
  grad.readout_bias += upstream;
  // d pooled / d H_last = 1/n for every row
  MatrixXd dh = (upstream / n) * (VectorXd::Ones(g.x.rows()) * m.readout.transpose());
  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const auto& l = m.layers[li];
    auto& gl = grad.layers[li];
    const MatrixXd dz = dh.cwiseProduct(t.pre[li].unaryExpr([](double v) { return leaky_grad(v); }));
    gl.w_self += t.inputs[li].transpose() * dz;
    gl.w_nbr += t.aggregated[li].transpose() * dz;
    gl.bias += dz.colwise().sum().transpose();
    if (li > 0) dh = dz * l.w_self.transpose() + aggregate_transpose(g.nbrs, dz * l.w_nbr.transpose());
  }
}

// ---- serialization ----

inline constexpr std::string_view kModelFormat = "antiplan-gnn";
inline constexpr int kModelVersion = 1;

inline nlohmann::json matrix_json(const MatrixXd& w) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index j = 0; j < w.cols(); ++j) r.push_back(w(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json vector_json(const VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline nlohmann::json to_json(const GnnModel& m) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["dims"] = m.dims();
  j["negative_slope"] = kLeakySlope;
  j["label_scale"] = m.label_scale;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : m.layers)
    j["layers"].push_back({{"w_self", matrix_json(l.w_self)}, {"w_nbr", matrix_json(l.w_nbr)}, {"bias", vector_json(l.bias)}});
  j["readout"] = {{"weight", vector_json(m.readout)}, {"bias", m.readout_bias}};
  return j;
}

inline GnnModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != kModelFormat || j.value("version", 0) != kModelVersion) throw DimensionMismatch("not an antiplan-gnn v1 model");
  const auto dims = j.at("dims").get<std::vector<int>>();
  if (dims.size() < 3 || dims.back() != 1 || dims.front() != kFeatureDim) throw DimensionMismatch("unsupported model dims");
  GnnModel m = GnnModel::zeros(std::vector<int>(dims.begin(), dims.end() - 1));
  m.label_scale = j.at("label_scale").get<double>();
  const auto& layers = j.at("layers");
  if (layers.size() != m.layers.size()) throw DimensionMismatch("layer count does not match dims");
  auto read_matrix = [](const nlohmann::json& a, MatrixXd& w) {
    if (static_cast<Eigen::Index>(a.size()) != w.rows()) throw DimensionMismatch("weight rows do not match dims");
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const auto& r = a[static_cast<std::size_t>(i)];
      if (static_cast<Eigen::Index>(r.size()) != w.cols()) throw DimensionMismatch("weight columns do not match dims");
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(i, c) = r[static_cast<std::size_t>(c)].get<double>();
    }
  };
  auto read_vector = [](const nlohmann::json& a, VectorXd& v) {
    if (static_cast<Eigen::Index>(a.size()) != v.size()) throw DimensionMismatch("vector length does not match dims");
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = a[static_cast<std::size_t>(i)].get<double>();
  };
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    read_matrix(layers[l].at("w_self"), m.layers[l].w_self);
    read_matrix(layers[l].at("w_nbr"), m.layers[l].w_nbr);
    read_vector(layers[l].at("bias"), m.layers[l].bias);
  }
  read_vector(j.at("readout").at("weight"), m.readout);
  m.readout_bias = j.at("readout").at("bias").get<double>();
  return m;
}

inline void save_model(const GnnModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UnknownEntity("cannot write " + path);
  out << to_json(m).dump(1) << '\n';
}

inline GnnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UnknownEntity("cannot open " + path);
  return model_from_json(nlohmann::json::parse(in));
}

}  // namespace antiplan::learn
