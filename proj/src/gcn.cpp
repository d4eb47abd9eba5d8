#include "gnnx/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "gnnx/adam.hpp"
#include "gnnx/random.hpp"

namespace gnnx {

namespace {

NormalizedAdjacency normalize_with_degrees(const Graph& g,
                                           std::span<const double> edge_weights,
                                           const std::vector<int>& in_degree) {
  if (edge_weights.size() != g.num_edges()) {
    throw std::invalid_argument("edge weights have length " +
                                std::to_string(edge_weights.size()) + ", graph has " +
                                std::to_string(g.num_edges()) + " edges");
  }
  NormalizedAdjacency adj;
  adj.num_nodes = g.num_nodes();
  adj.edges.assign(g.edges().begin(), g.edges().end());
  adj.self_loop.resize(g.num_nodes());
  std::vector<double> inv_sqrt(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    const double degree = 1.0 + in_degree[v];
    adj.self_loop[v] = 1.0 / degree;
    inv_sqrt[v] = 1.0 / std::sqrt(degree);
  }
  adj.edge_norm.resize(g.num_edges());
  adj.edge_value.resize(g.num_edges());
  for (EdgeIndex e = 0; e < g.num_edges(); ++e) {
    const double w = edge_weights[e];
    if (!(w >= 0.0 && w <= 1.0)) {
      throw std::invalid_argument("edge weight " + std::to_string(w) +
                                  " outside [0,1] at edge " + std::to_string(e));
    }
    adj.edge_norm[e] = inv_sqrt[g.edge(e).src] * inv_sqrt[g.edge(e).dst];
    adj.edge_value[e] = w * adj.edge_norm[e];
  }
  return adj;
}

// out = A * in. Accumulation order per row is self-loop first, then incoming
// edges by ascending source, so a row's value does not depend on which other
// nodes are present.
Matrix propagate(const NormalizedAdjacency& adj, const Matrix& in) {
  Matrix out(in.rows(), in.cols());
  for (Eigen::Index v = 0; v < in.rows(); ++v) out.row(v) = adj.self_loop[v] * in.row(v);
  for (std::size_t e = 0; e < adj.edges.size(); ++e) {
    out.row(adj.edges[e].dst) += adj.edge_value[e] * in.row(adj.edges[e].src);
  }
  return out;
}

// out = A^T * in.
Matrix propagate_transpose(const NormalizedAdjacency& adj, const Matrix& in) {
  Matrix out(in.rows(), in.cols());
  for (Eigen::Index v = 0; v < in.rows(); ++v) out.row(v) = adj.self_loop[v] * in.row(v);
  for (std::size_t e = 0; e < adj.edges.size(); ++e) {
    out.row(adj.edges[e].src) += adj.edge_value[e] * in.row(adj.edges[e].dst);
  }
  return out;
}

// Plain row-by-row product. Each output entry sums over k in a fixed order
// regardless of the number of rows.
Matrix multiply(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      out.row(i) += aik * b.row(k);
    }
  }
  return out;
}

void check_features(const GcnModel& model, const NormalizedAdjacency& adj,
                    const Matrix& features) {
  if (model.layers().empty()) throw std::invalid_argument("model has no layers");
  if (features.cols() != model.input_dim()) {
    throw std::invalid_argument("feature dimension " + std::to_string(features.cols()) +
                                " does not match model input " +
                                std::to_string(model.input_dim()));
  }
  if (features.rows() != adj.num_nodes) {
    throw std::invalid_argument("feature rows do not match node count");
  }
}

}  // namespace

Matrix NormalizedAdjacency::ToDense() const {
  Matrix dense = Matrix::Zero(num_nodes, num_nodes);
  for (int v = 0; v < num_nodes; ++v) dense(v, v) = self_loop[v];
  for (std::size_t e = 0; e < edges.size(); ++e) {
    dense(edges[e].dst, edges[e].src) += edge_value[e];
  }
  return dense;
}

NormalizedAdjacency normalize_adjacency(const Graph& g,
                                        std::span<const double> edge_weights) {
  std::vector<int> degree(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) degree[v] = g.in_degree(v);
  return normalize_with_degrees(g, edge_weights, degree);
}

NormalizedAdjacency normalize_adjacency(const ComputationGraph& cg,
                                        std::span<const double> edge_weights) {
  return normalize_with_degrees(cg.subgraph, edge_weights, cg.parent_in_degree);
}

GcnModel::GcnModel(std::vector<GcnLayer> layers, double dropout,
                   std::optional<GcnLayer> readout)
    : layers_(std::move(layers)), dropout_(dropout), readout_(std::move(readout)) {
  if (layers_.empty()) throw std::invalid_argument("model needs at least one layer");
  if (!(dropout_ >= 0.0 && dropout_ < 1.0)) {
    throw std::invalid_argument("dropout must lie in [0,1)");
  }
  Eigen::Index concat_width = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].weight.cols()) {
      throw std::invalid_argument("bias width does not match layer " + std::to_string(l));
    }
    if (l > 0 && layers_[l].weight.rows() != layers_[l - 1].weight.cols()) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  " input width does not chain with previous layer");
    }
    concat_width += layers_[l].weight.cols();
  }
  if (readout_) {
    if (readout_->weight.rows() != concat_width) {
      throw std::invalid_argument("readout input width " +
                                  std::to_string(readout_->weight.rows()) +
                                  " does not match concatenated width " +
                                  std::to_string(concat_width));
    }
    if (readout_->bias.size() != readout_->weight.cols()) {
      throw std::invalid_argument("bias width does not match readout");
    }
  }
}

namespace {

GcnLayer glorot_layer(Rng& rng, int in, int out) {
  const double bound = std::sqrt(6.0 / (in + out));
  const double bias_bound = 1.0 / std::sqrt(in);
  GcnLayer layer{Matrix(in, out), RowVector(out)};
  for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
    layer.weight.data()[i] = (2.0 * uniform01(rng) - 1.0) * bound;
  }
  for (Eigen::Index i = 0; i < out; ++i) {
    layer.bias(i) = (2.0 * uniform01(rng) - 1.0) * bias_bound;
  }
  return layer;
}

}  // namespace

GcnModel GcnModel::Initialize(const ModelShape& shape, std::uint64_t seed) {
  if (shape.num_layers < 1) throw std::invalid_argument("num_layers must be >= 1");
  if (shape.input_dim < 1 || shape.hidden_dim < 1 || shape.num_classes < 1) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  Rng rng(seed);
  std::vector<GcnLayer> layers;
  int in = shape.input_dim;
  for (int l = 0; l < shape.num_layers; ++l) {
    const bool last = l + 1 == shape.num_layers;
    const int out = last && !shape.concat_readout ? shape.num_classes : shape.hidden_dim;
    layers.push_back(glorot_layer(rng, in, out));
    in = out;
  }
  std::optional<GcnLayer> readout;
  if (shape.concat_readout) {
    readout = glorot_layer(rng, shape.hidden_dim * shape.num_layers, shape.num_classes);
  }
  return GcnModel(std::move(layers), shape.dropout, std::move(readout));
}

int GcnModel::num_classes() const {
  return static_cast<int>(readout_ ? readout_->weight.cols() : layers_.back().weight.cols());
}

std::vector<int> GcnModel::dims() const {
  std::vector<int> d{input_dim()};
  for (const auto& layer : layers_) d.push_back(static_cast<int>(layer.weight.cols()));
  return d;
}

ForwardPass forward(const GcnModel& model, const NormalizedAdjacency& adj,
                    const Matrix& features, bool train_mode, std::uint64_t seed) {
  check_features(model, adj, features);
  const int depth = model.num_layers();
  const bool use_dropout = train_mode && model.dropout() > 0.0;
  ForwardPass pass;
  pass.inputs.reserve(depth + 1);
  pass.inputs.push_back(features);
  for (int l = 0; l < depth; ++l) {
    const auto& layer = model.layers()[l];
    pass.projected.push_back(multiply(pass.inputs.back(), layer.weight));
    Matrix z = propagate(adj, pass.projected.back());
    z.rowwise() += layer.bias;
    pass.preactivation.push_back(z);
    if (l + 1 == depth) {
      pass.inputs.push_back(std::move(z));
      break;
    }
    Matrix h = z.cwiseMax(0.0);
    if (use_dropout) {
      Rng rng(derive_seed({seed, static_cast<std::uint64_t>(l)}));
      const double keep = 1.0 - model.dropout();
      Matrix scale(h.rows(), h.cols());
      for (Eigen::Index i = 0; i < scale.size(); ++i) {
        scale.data()[i] = uniform01(rng) < keep ? 1.0 / keep : 0.0;
      }
      h = h.cwiseProduct(scale);
      pass.dropout_scale.push_back(std::move(scale));
    }
    pass.inputs.push_back(std::move(h));
  }
  // inputs[depth] holds the last convolution's output.
  if (!model.has_readout()) {
    pass.logits = std::move(pass.inputs.back());
    pass.inputs.pop_back();
    return pass;
  }
  Eigen::Index width = 0;
  for (int l = 1; l <= depth; ++l) width += pass.inputs[l].cols();
  pass.readout_input.resize(features.rows(), width);
  Eigen::Index offset = 0;
  for (int l = 1; l <= depth; ++l) {
    pass.readout_input.middleCols(offset, pass.inputs[l].cols()) = pass.inputs[l];
    offset += pass.inputs[l].cols();
  }
  pass.logits = multiply(pass.readout_input, model.readout()->weight);
  pass.logits.rowwise() += model.readout()->bias;
  return pass;
}

RowVector forward_node(const GcnModel& model, const NormalizedAdjacency& adj,
                       const Matrix& features, NodeId node) {
  check_features(model, adj, features);
  if (node < 0 || node >= adj.num_nodes) throw std::invalid_argument("node outside the graph");
  const int depth = model.num_layers();

  // Hops from each node to `node` along edge direction, capped at depth + 1.
  std::vector<int> hops(adj.num_nodes, depth + 1);
  hops[node] = 0;
  for (int round = 0; round < depth; ++round) {
    for (const auto& e : adj.edges) {
      if (hops[e.dst] == round && hops[e.src] > round + 1) hops[e.src] = round + 1;
    }
  }

  // Rows of `in` reachable within `radius` hops feed the output rows within
  // radius - 1.
  Matrix in = features;
  std::vector<RowVector> outputs;
  for (int l = 0; l < depth; ++l) {
    const auto& layer = model.layers()[l];
    const int radius = depth - l;
    Matrix projected(in.rows(), layer.weight.cols());
    for (Eigen::Index v = 0; v < in.rows(); ++v) {
      if (hops[v] > radius) continue;
      projected.row(v).setZero();
      for (Eigen::Index k = 0; k < in.cols(); ++k) {
        const double a = in(v, k);
        if (a == 0.0) continue;
        projected.row(v) += a * layer.weight.row(k);
      }
    }
    Matrix z(in.rows(), layer.weight.cols());
    for (Eigen::Index v = 0; v < in.rows(); ++v) {
      if (hops[v] < radius) z.row(v) = adj.self_loop[v] * projected.row(v);
    }
    for (std::size_t e = 0; e < adj.edges.size(); ++e) {
      if (hops[adj.edges[e].dst] >= radius) continue;
      z.row(adj.edges[e].dst) += adj.edge_value[e] * projected.row(adj.edges[e].src);
    }
    for (Eigen::Index v = 0; v < in.rows(); ++v) {
      if (hops[v] >= radius) continue;
      z.row(v) += layer.bias;
      if (l + 1 < depth) z.row(v) = z.row(v).cwiseMax(0.0);
    }
    outputs.push_back(z.row(node));
    in = std::move(z);
  }
  if (!model.has_readout()) return outputs.back();

  const auto& readout = *model.readout();
  RowVector logits = RowVector::Zero(readout.weight.cols());
  Eigen::Index k = 0;
  for (const auto& out : outputs) {
    for (Eigen::Index c = 0; c < out.size(); ++c, ++k) {
      if (out(c) == 0.0) continue;
      logits += out(c) * readout.weight.row(k);
    }
  }
  return logits + readout.bias;
}

Gradients backward(const GcnModel& model, const NormalizedAdjacency& adj,
                   const ForwardPass& pass, const Matrix& grad_logits) {
  const int depth = model.num_layers();
  Gradients grads;
  grads.weights.resize(depth);
  grads.biases.resize(depth);
  grads.layer_inputs.resize(depth);
  grads.edge_weights.assign(adj.edges.size(), 0.0);

  // d_output[l]: gradient w.r.t. the output of convolution l after its
  // activation.
  std::vector<Matrix> d_output(depth);
  if (model.has_readout()) {
    const auto& readout = *model.readout();
    grads.readout_weight = pass.readout_input.transpose() * grad_logits;
    grads.readout_bias = grad_logits.colwise().sum();
    const Matrix d_readout_input = grad_logits * readout.weight.transpose();
    Eigen::Index offset = 0;
    for (int l = 0; l < depth; ++l) {
      const Eigen::Index width = model.layers()[l].weight.cols();
      d_output[l] = d_readout_input.middleCols(offset, width);
      offset += width;
    }
  } else {
    d_output[depth - 1] = grad_logits;
  }

  for (int l = depth - 1; l >= 0; --l) {
    const auto& layer = model.layers()[l];
    Matrix g = std::move(d_output[l]);
    if (l + 1 < depth) {
      if (!pass.dropout_scale.empty()) g = g.cwiseProduct(pass.dropout_scale[l]);
      const Matrix& z = pass.preactivation[l];
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (!(z.data()[i] > 0.0)) g.data()[i] = 0.0;
      }
    }
    grads.biases[l] = g.colwise().sum();
    const Matrix& projected = pass.projected[l];
    for (std::size_t e = 0; e < adj.edges.size(); ++e) {
      grads.edge_weights[e] += adj.edge_norm[e] *
                               g.row(adj.edges[e].dst).dot(projected.row(adj.edges[e].src));
    }
    const Matrix d_projected = propagate_transpose(adj, g);
    grads.weights[l] = pass.inputs[l].transpose() * d_projected;
    grads.layer_inputs[l] = d_projected * layer.weight.transpose();
    if (l > 0) {
      if (d_output[l - 1].size() == 0) {
        d_output[l - 1] = grads.layer_inputs[l];
      } else {
        d_output[l - 1] += grads.layer_inputs[l];
      }
    }
  }
  grads.features = grads.layer_inputs[0];
  return grads;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    auto row = (logits.row(i).array() - peak).exp();
    probs.row(i) = row / row.sum();
  }
  return probs;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> result(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j) {
      if (m(i, j) > m(i, best)) best = j;
    }
    result[i] = static_cast<int>(best);
  }
  return result;
}

LossAndGrads loss_and_grads(const GcnModel& model, const NormalizedAdjacency& adj,
                            const Matrix& features, std::span<const int> targets,
                            std::span<const NodeId> nodes, double weight_decay,
                            bool train_mode, std::uint64_t seed) {
  if (nodes.empty()) throw std::invalid_argument("loss over an empty node set");
  const ForwardPass pass = forward(model, adj, features, train_mode, seed);
  const Matrix& logits = pass.logits;
  Matrix grad_logits = Matrix::Zero(logits.rows(), logits.cols());
  const double scale = 1.0 / static_cast<double>(nodes.size());
  double loss = 0.0;
  for (NodeId v : nodes) {
    const int y = targets[v];
    if (y < 0 || y >= logits.cols()) throw std::invalid_argument("target class out of range");
    const double peak = logits.row(v).maxCoeff();
    const RowVector shifted = logits.row(v).array() - peak;
    const double log_norm = std::log(shifted.array().exp().sum());
    loss -= (shifted(y) - log_norm) * scale;
    grad_logits.row(v) += (shifted.array() - log_norm).exp().matrix() * scale;
    grad_logits(v, y) -= scale;
  }

  LossAndGrads result;
  result.grads = backward(model, adj, pass, grad_logits);
  if (weight_decay != 0.0) {
    for (int l = 0; l < model.num_layers(); ++l) {
      const Matrix& w = model.layers()[l].weight;
      loss += 0.5 * weight_decay * w.squaredNorm();
      result.grads.weights[l] += weight_decay * w;
    }
    if (model.has_readout()) {
      const Matrix& w = model.readout()->weight;
      loss += 0.5 * weight_decay * w.squaredNorm();
      result.grads.readout_weight += weight_decay * w;
    }
  }
  result.loss = loss;
  result.logits = pass.logits;
  return result;
}

Prediction predict(const GcnModel& model, const NormalizedAdjacency& adj,
                   const Matrix& features) {
  Prediction p;
  p.probs = softmax_rows(forward(model, adj, features).logits);
  p.labels = argmax_rows(p.probs);
  return p;
}

Prediction predict(const GcnModel& model, const Graph& g,
                   std::span<const double> edge_weights) {
  return predict(model, normalize_adjacency(g, edge_weights), g.features());
}

void TrainConfig::Validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be non-negative");
}

namespace {

ModelReport score(std::span<const int> truth, std::span<const int> predicted) {
  ModelReport report;
  if (truth.empty()) return report;
  std::set<int> classes(truth.begin(), truth.end());
  classes.insert(predicted.begin(), predicted.end());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i];
  report.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  for (int c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (predicted[i] == c && truth[i] == c) ++tp;
      if (predicted[i] == c && truth[i] != c) ++fp;
      if (predicted[i] != c && truth[i] == c) ++fn;
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f1 =
        precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    report.precision_macro += precision;
    report.recall_macro += recall;
    report.f1_macro += f1;
  }
  const auto k = static_cast<double>(classes.size());
  report.precision_macro /= k;
  report.recall_macro /= k;
  report.f1_macro /= k;
  return report;
}

std::vector<NodeId> nodes_in(const Graph& g, Split split) {
  std::vector<NodeId> nodes;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.splits()[v] == split) nodes.push_back(v);
  }
  return nodes;
}

double accuracy_on(std::span<const NodeId> nodes, std::span<const int> labels,
                   const std::vector<int>& predicted) {
  std::size_t correct = 0;
  for (NodeId v : nodes) correct += predicted[v] == labels[v];
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

}  // namespace

ModelReport evaluate_split(const GcnModel& model, const Graph& g, Split split) {
  const auto nodes = nodes_in(g, split);
  const Prediction p = predict(model, g, g.edge_weights());
  std::vector<int> truth, predicted;
  for (NodeId v : nodes) {
    truth.push_back(g.labels()[v]);
    predicted.push_back(p.labels[v]);
  }
  return score(truth, predicted);
}

TrainResult train(const Graph& g, const ModelShape& shape, const TrainConfig& cfg) {
  cfg.Validate();
  if (shape.input_dim != g.feature_dim()) {
    throw std::invalid_argument("model input_dim does not match graph features");
  }
  if (shape.num_classes != g.num_classes()) {
    throw std::invalid_argument("model num_classes does not match graph labels");
  }
  const auto train_nodes = nodes_in(g, Split::kTrain);
  if (train_nodes.empty()) throw std::invalid_argument("train split is empty");
  auto val_nodes = nodes_in(g, Split::kVal);
  if (val_nodes.empty()) val_nodes = train_nodes;

  const NormalizedAdjacency adj = normalize_adjacency(g, g.edge_weights());
  GcnModel model = GcnModel::Initialize(shape, derive_seed({cfg.seed, 0x1417}));
  Adam adam({cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps});
  const bool stochastic = shape.dropout > 0.0;

  GcnModel best = model;
  double best_val = -1.0;
  int best_epoch = 0;
  auto consider = [&](const Matrix& logits, int epoch) {
    const double val = accuracy_on(val_nodes, g.labels(), argmax_rows(logits));
    if (val >= best_val) {
      best_val = val;
      best = model;
      best_epoch = epoch;
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto step = loss_and_grads(model, adj, g.features(), g.labels(), train_nodes,
                                     cfg.weight_decay, stochastic,
                                     derive_seed({cfg.seed, static_cast<std::uint64_t>(epoch)}));
    if (!std::isfinite(step.loss)) {
      throw std::runtime_error("training diverged: loss is " + std::to_string(step.loss) +
                               " at epoch " + std::to_string(epoch));
    }
    consider(stochastic ? forward(model, adj, g.features()).logits : step.logits, epoch);
    adam.BeginStep();
    auto& layers = model.mutable_layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      adam.Update(2 * l, {layers[l].weight.data(), static_cast<std::size_t>(layers[l].weight.size())},
                  {step.grads.weights[l].data(), static_cast<std::size_t>(step.grads.weights[l].size())});
      adam.Update(2 * l + 1, {layers[l].bias.data(), static_cast<std::size_t>(layers[l].bias.size())},
                  {step.grads.biases[l].data(), static_cast<std::size_t>(step.grads.biases[l].size())});
    }
    if (auto& readout = model.mutable_readout()) {
      const std::size_t slot = 2 * layers.size();
      adam.Update(slot, {readout->weight.data(), static_cast<std::size_t>(readout->weight.size())},
                  {step.grads.readout_weight.data(),
                   static_cast<std::size_t>(step.grads.readout_weight.size())});
      adam.Update(slot + 1, {readout->bias.data(), static_cast<std::size_t>(readout->bias.size())},
                  {step.grads.readout_bias.data(),
                   static_cast<std::size_t>(step.grads.readout_bias.size())});
    }
  }
  consider(forward(model, adj, g.features()).logits, cfg.epochs);

  TrainResult result{std::move(best), {}};
  result.report = evaluate_split(result.model, g, Split::kTest);
  result.report.best_epoch = best_epoch;
  return result;
}

}  // namespace gnnx
