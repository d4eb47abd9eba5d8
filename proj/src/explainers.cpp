#include "gnnx/explainers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gnnx/adam.hpp"
#include "gnnx/random.hpp"

namespace gnnx {

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ElapsedMs() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void check_target(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                  int target_label) {
  if (target != cg.target) {
    throw std::invalid_argument("target " + std::to_string(target) +
                                " is not the computation graph's target " +
                                std::to_string(cg.target));
  }
  if (target_label < 0 || target_label >= model.num_classes()) {
    throw std::invalid_argument("target label " + std::to_string(target_label) +
                                " outside the model's classes");
  }
}

Explanation make_explanation(std::string name, const ComputationGraph& cg, int target_label,
                             std::vector<double> mask, const Stopwatch& clock) {
  Explanation out;
  out.explainer = std::move(name);
  out.target = cg.target;
  out.target_label = target_label;
  out.edge_mask = std::move(mask);
  out.time_ms = clock.ElapsedMs();
  return out;
}

Matrix one_hot_gradient(const ComputationGraph& cg, const GcnModel& model, int label) {
  Matrix grad = Matrix::Zero(cg.subgraph.num_nodes(), model.num_classes());
  grad(cg.target_local, label) = 1.0;
  return grad;
}

std::vector<double> row_l1_norms(const Matrix& m) {
  std::vector<double> norms(m.rows());
  for (Eigen::Index v = 0; v < m.rows(); ++v) norms[v] = m.row(v).cwiseAbs().sum();
  return norms;
}

// Directed hop count from every node to `target`, kUnreachable if none.
std::vector<int> hops_to(const Graph& g, NodeId target) {
  std::vector<int> hops(g.num_nodes(), kUnreachable);
  std::vector<NodeId> frontier{target};
  hops[target] = 0;
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const NodeId v = frontier[head];
    for (EdgeIndex e : g.in_edges(v)) {
      const NodeId u = g.edge(e).src;
      if (hops[u] != kUnreachable) continue;
      hops[u] = hops[v] + 1;
      frontier.push_back(u);
    }
  }
  return hops;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kEntropyEps = 1e-15;

double binary_entropy(double s) {
  return -s * std::log(s + kEntropyEps) - (1.0 - s) * std::log(1.0 - s + kEntropyEps);
}

double binary_entropy_derivative(double s) {
  return -std::log(s + kEntropyEps) - s / (s + kEntropyEps) + std::log(1.0 - s + kEntropyEps) +
         (1.0 - s) / (1.0 - s + kEntropyEps);
}

}  // namespace

Explanation explain_random(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                           int target_label, std::uint64_t seed) {
  const Stopwatch clock;
  check_target(model, cg, target, target_label);
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(target), 0x72616e64}));
  std::vector<double> values(cg.subgraph.num_edges());
  for (double& v : values) v = uniform01(rng);
  FeatureMask features{Matrix(1, cg.subgraph.feature_dim())};
  for (Eigen::Index j = 0; j < features.values.cols(); ++j) features.values(0, j) = uniform01(rng);
  auto out = make_explanation("random", cg, target_label, normalize(values), clock);
  out.feature_mask = std::move(features);
  out.time_ms = clock.ElapsedMs();
  return out;
}

Explanation explain_distance(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                             int target_label, std::uint64_t) {
  const Stopwatch clock;
  check_target(model, cg, target, target_label);
  const auto hops = bfs_distances(cg.subgraph, cg.target_local);
  std::vector<double> scores(hops.size());
  for (std::size_t v = 0; v < hops.size(); ++v) {
    scores[v] = hops[v] == kUnreachable ? 0.0 : 1.0 / (1.0 + hops[v]);
  }
  return make_explanation("distance", cg, target_label, node_to_edge(scores, cg.subgraph), clock);
}

std::vector<double> personalized_pagerank(const Graph& g, NodeId restart,
                                          const PageRankOptions& options) {
  if (restart < 0 || restart >= g.num_nodes()) {
    throw std::invalid_argument("restart node outside the graph");
  }
  if (!(options.damping >= 0.0 && options.damping < 1.0)) {
    throw std::invalid_argument("damping must lie in [0,1)");
  }
  if (options.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  const int n = g.num_nodes();
  std::vector<double> rank(n, 0.0), next(n);
  rank[restart] = 1.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    double dangling = 0.0;
    for (NodeId u = 0; u < n; ++u) {
      const auto [begin, end] = g.out_edge_range(u);
      if (begin == end) {
        dangling += rank[u];
        continue;
      }
      const double share = options.damping * rank[u] / static_cast<double>(end - begin);
      for (EdgeIndex e = begin; e < end; ++e) next[g.edge(e).dst] += share;
    }
    next[restart] += (1.0 - options.damping) + options.damping * dangling;
    double change = 0.0;
    for (NodeId v = 0; v < n; ++v) change += std::abs(next[v] - rank[v]);
    rank.swap(next);
    if (change < options.tolerance) break;
  }
  return rank;
}

Explanation explain_pagerank(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                             int target_label, std::uint64_t, const PageRankOptions& options) {
  const Stopwatch clock;
  check_target(model, cg, target, target_label);
  const auto scores = personalized_pagerank(cg.subgraph, cg.target_local, options);
  return make_explanation("pagerank", cg, target_label, node_to_edge(scores, cg.subgraph), clock);
}

Matrix feature_gradient(const GcnModel& model, const ComputationGraph& cg, int label) {
  const auto adj = normalize_adjacency(cg, cg.subgraph.edge_weights());
  const auto pass = forward(model, adj, cg.subgraph.features());
  return backward(model, adj, pass, one_hot_gradient(cg, model, label)).features;
}

Explanation explain_saliency(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                             int target_label, std::uint64_t) {
  const Stopwatch clock;
  check_target(model, cg, target, target_label);
  const auto scores = row_l1_norms(feature_gradient(model, cg, target_label));
  return make_explanation("saliency", cg, target_label, node_to_edge(scores, cg.subgraph), clock);
}

Matrix integrated_gradients(const GcnModel& model, const ComputationGraph& cg, int label,
                            int steps) {
  if (steps < 1) throw std::invalid_argument("integrated gradients needs steps >= 1");
  const auto adj = normalize_adjacency(cg, cg.subgraph.edge_weights());
  const Matrix& x = cg.subgraph.features();
  const Matrix grad_logits = one_hot_gradient(cg, model, label);
  Matrix total = Matrix::Zero(x.rows(), x.cols());
  for (int i = 0; i < steps; ++i) {
    const double alpha = (i + 0.5) / steps;
    const Matrix scaled = alpha * x;
    total += backward(model, adj, forward(model, adj, scaled), grad_logits).features;
  }
  return x.cwiseProduct(total / steps);
}

Explanation explain_integrated_gradients(const GcnModel& model, const ComputationGraph& cg,
                                         NodeId target, int target_label, std::uint64_t,
                                         int steps) {
  const Stopwatch clock;
  check_target(model, cg, target, target_label);
  const auto scores = row_l1_norms(integrated_gradients(model, cg, target_label, steps));
  return make_explanation("integrated_gradients", cg, target_label,
                          node_to_edge(scores, cg.subgraph), clock);
}

GradCam gradcam(const GcnModel& model, const ComputationGraph& cg, int label) {
  const auto adj = normalize_adjacency(cg, cg.subgraph.edge_weights());
  const auto pass = forward(model, adj, cg.subgraph.features());
  const Matrix grad_logits = one_hot_gradient(cg, model, label);
  const auto grads = backward(model, adj, pass, grad_logits);
  const int last = model.num_layers() - 1;
  GradCam out;
  out.activation = pass.inputs[last];
  Matrix d_activation = grads.layer_inputs[last];
  if (model.has_readout() && last > 0) {
    // H is also the output of convolution last-1, which feeds the readout.
    Eigen::Index offset = 0;
    for (int l = 0; l + 1 < last; ++l) offset += model.layers()[l].weight.cols();
    const auto& readout = *model.readout();
    d_activation += grad_logits * readout.weight.middleRows(offset, out.activation.cols()).transpose();
  }
  out.alpha = d_activation.colwise().mean();
  out.node_scores.resize(out.activation.rows());
  for (Eigen::Index v = 0; v < out.activation.rows(); ++v) {
    out.node_scores[v] = std::max(0.0, out.activation.row(v).dot(out.alpha));
  }
  return out;
}

Explanation explain_gradcam(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                            int target_label, std::uint64_t) {
  const Stopwatch clock;
  check_target(model, cg, target, target_label);
  const auto scores = gradcam(model, cg, target_label).node_scores;
  std::vector<double> mask(cg.subgraph.num_edges(), 0.0);
  if (std::any_of(scores.begin(), scores.end(), [](double s) { return s > 0.0; })) {
    mask = node_to_edge(scores, cg.subgraph);
  }
  return make_explanation("gradcam", cg, target_label, std::move(mask), clock);
}

Explanation explain_occlusion(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                              int target_label, std::uint64_t) {
  const Stopwatch clock;
  check_target(model, cg, target, target_label);
  const Graph& g = cg.subgraph;
  const auto base = g.edge_weights();
  const Matrix& x = g.features();
  auto target_prob = [&](std::span<const double> weights) {
    const Matrix logits = forward_node(model, normalize_adjacency(cg, weights), x, cg.target_local);
    return softmax_rows(logits)(0, target_label);
  };
  const double full = target_prob(base);

  // An edge u->v can only change the target's output if v reaches the target
  // in fewer than num_layers steps; the others keep a drop of exactly 0.
  const auto hops = hops_to(g, cg.target_local);
  std::vector<std::vector<EdgeIndex>> members(g.num_pairs());
  for (EdgeIndex e = 0; e < g.num_edges(); ++e) members[g.edge_pair()[e]].push_back(e);
  std::vector<double> weights(base.begin(), base.end());
  std::vector<double> scores(g.num_edges(), 0.0);
  for (const auto& pair : members) {
    const bool reaches = std::any_of(pair.begin(), pair.end(), [&](EdgeIndex e) {
      return hops[g.edge(e).dst] < model.num_layers();
    });
    if (!reaches) continue;
    for (EdgeIndex e : pair) weights[e] = 0.0;
    const double drop = std::max(0.0, full - target_prob(weights));
    for (EdgeIndex e : pair) {
      weights[e] = base[e];
      scores[e] = drop;
    }
  }
  return make_explanation("occlusion", cg, target_label, normalize(scores), clock);
}

Explanation explain_gnnexplainer(const GcnModel& model, const ComputationGraph& cg,
                                 NodeId target, int target_label, std::uint64_t seed,
                                 const GnnExplainerOptions& options,
                                 std::vector<double>* loss_history) {
  const Stopwatch clock;
  check_target(model, cg, target, target_label);
  if (options.epochs < 0) throw std::invalid_argument("gnnexplainer epochs must be >= 0");
  if (!(options.learning_rate > 0.0)) {
    throw std::invalid_argument("gnnexplainer learning rate must be positive");
  }
  const Graph& g = cg.subgraph;
  const auto base = g.edge_weights();
  const Matrix& x = g.features();
  const auto& pair_of = g.edge_pair();
  const std::size_t num_pairs = g.num_pairs();
  const auto num_features = static_cast<std::size_t>(g.feature_dim());

  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(target), 0x676e6e}));
  std::vector<double> edge_logits(num_pairs);
  for (double& v : edge_logits) v = options.init_mean + options.init_std * standard_normal(rng);
  std::vector<double> feature_logits;
  if (options.feature_mask) {
    feature_logits.resize(num_features);
    for (double& v : feature_logits) {
      v = options.init_mean + options.init_std * standard_normal(rng);
    }
  }

  std::vector<double> edge_grad(num_pairs), feature_grad(feature_logits.size());
  // Loss at the current logits; fills edge_grad and feature_grad.
  auto evaluate = [&]() {
    std::vector<double> gate(num_pairs);
    for (std::size_t p = 0; p < num_pairs; ++p) gate[p] = sigmoid(edge_logits[p]);
    std::vector<double> weights(g.num_edges());
    for (EdgeIndex e = 0; e < g.num_edges(); ++e) weights[e] = gate[pair_of[e]] * base[e];
    Matrix features = x;
    std::vector<double> feature_gate(feature_logits.size());
    for (std::size_t j = 0; j < feature_logits.size(); ++j) {
      feature_gate[j] = sigmoid(feature_logits[j]);
      features.col(static_cast<Eigen::Index>(j)) *= feature_gate[j];
    }

    const auto adj = normalize_adjacency(cg, weights);
    const auto pass = forward(model, adj, features);
    const RowVector logits = pass.logits.row(cg.target_local);
    const double peak = logits.maxCoeff();
    const RowVector shifted = logits.array() - peak;
    const double log_norm = std::log(shifted.array().exp().sum());
    double loss = -(shifted(target_label) - log_norm);
    Matrix grad_logits = Matrix::Zero(pass.logits.rows(), pass.logits.cols());
    grad_logits.row(cg.target_local) = (shifted.array() - log_norm).exp().matrix();
    grad_logits(cg.target_local, target_label) -= 1.0;
    const auto grads = backward(model, adj, pass, grad_logits);

    std::fill(edge_grad.begin(), edge_grad.end(), 0.0);
    for (EdgeIndex e = 0; e < g.num_edges(); ++e) {
      edge_grad[pair_of[e]] += grads.edge_weights[e] * base[e];
    }
    const double pair_scale = num_pairs > 0 ? 1.0 / static_cast<double>(num_pairs) : 0.0;
    for (std::size_t p = 0; p < num_pairs; ++p) {
      const double s = gate[p];
      loss += options.size_coef * s + options.entropy_coef * pair_scale * binary_entropy(s);
      const double d_gate = edge_grad[p] + options.size_coef +
                            options.entropy_coef * pair_scale * binary_entropy_derivative(s);
      edge_grad[p] = d_gate * s * (1.0 - s);
    }
    if (!feature_logits.empty()) {
      const double feature_scale = 1.0 / static_cast<double>(feature_logits.size());
      for (std::size_t j = 0; j < feature_logits.size(); ++j) {
        const double s = feature_gate[j];
        const auto col = static_cast<Eigen::Index>(j);
        loss += feature_scale * (options.feature_size_coef * s +
                                 options.feature_entropy_coef * binary_entropy(s));
        const double d_gate =
            grads.features.col(col).dot(x.col(col)) +
            feature_scale * (options.feature_size_coef +
                             options.feature_entropy_coef * binary_entropy_derivative(s));
        feature_grad[j] = d_gate * s * (1.0 - s);
      }
    }
    return loss;
  };

  Adam adam({options.learning_rate, 0.9, 0.999, 1e-8});
  if (loss_history) loss_history->clear();
  for (int epoch = 0; epoch <= options.epochs; ++epoch) {
    const double loss = evaluate();
    if (!std::isfinite(loss)) {
      throw std::runtime_error("gnnexplainer loss is " + std::to_string(loss) + " at epoch " +
                               std::to_string(epoch) + " for target " + std::to_string(target));
    }
    if (loss_history) loss_history->push_back(loss);
    if (epoch == options.epochs) break;
    adam.BeginStep();
    adam.Update(0, edge_logits, edge_grad);
    if (!feature_logits.empty()) adam.Update(1, feature_logits, feature_grad);
  }

  std::vector<double> mask(g.num_edges());
  for (EdgeIndex e = 0; e < g.num_edges(); ++e) mask[e] = sigmoid(edge_logits[pair_of[e]]);
  auto out = make_explanation(options.feature_mask ? "gnnexplainer" : "basic_gnnexplainer", cg,
                              target_label, normalize(mask), clock);
  if (!feature_logits.empty()) {
    FeatureMask fm{Matrix(1, static_cast<Eigen::Index>(feature_logits.size()))};
    for (std::size_t j = 0; j < feature_logits.size(); ++j) {
      fm.values(0, static_cast<Eigen::Index>(j)) = sigmoid(feature_logits[j]);
    }
    out.feature_mask = std::move(fm);
  }
  out.time_ms = clock.ElapsedMs();
  return out;
}

ExplainerSpec ExplainerSpec::FromJson(const nlohmann::json& j) {
  ExplainerSpec spec;
  if (j.is_string()) {
    spec.name = j.get<std::string>();
    return spec;
  }
  spec.name = j.at("name").get<std::string>();
  if (j.contains("params")) {
    spec.params = j.at("params");
    if (!spec.params.is_object()) {
      throw std::invalid_argument("explainer params must be a JSON object");
    }
  }
  return spec;
}

nlohmann::json ExplainerSpec::ToJson() const { return {{"name", name}, {"params", params}}; }

namespace {

// Hands out parameters by name and rejects whatever was not asked for.
class ParamReader {
 public:
  ParamReader(const ExplainerSpec& spec) : name_(spec.name), remaining_(spec.params) {}

  template <typename T>
  T Get(const std::string& key, T fallback) {
    if (!remaining_.contains(key)) return fallback;
    T value;
    try {
      value = remaining_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument(name_ + ": parameter '" + key + "' has the wrong type");
    }
    remaining_.erase(key);
    return value;
  }

  void Finish() const {
    if (remaining_.empty()) return;
    throw std::invalid_argument(name_ + ": unknown parameter '" + remaining_.begin().key() + "'");
  }

 private:
  std::string name_;
  nlohmann::json remaining_;
};

}  // namespace

const std::vector<std::string>& explainer_names() {
  static const std::vector<std::string> names = {
      "random",  "distance",  "pagerank",     "saliency",          "integrated_gradients",
      "gradcam", "occlusion", "gnnexplainer", "basic_gnnexplainer"};
  return names;
}

Explainer make_explainer(const ExplainerSpec& spec) {
  ParamReader params(spec);
  Explainer out{spec.name, {}};
  if (spec.name == "random") {
    out.fn = explain_random;
  } else if (spec.name == "distance") {
    out.fn = explain_distance;
  } else if (spec.name == "saliency") {
    out.fn = explain_saliency;
  } else if (spec.name == "gradcam") {
    out.fn = explain_gradcam;
  } else if (spec.name == "occlusion") {
    out.fn = explain_occlusion;
  } else if (spec.name == "pagerank") {
    PageRankOptions options;
    options.damping = params.Get("damping", options.damping);
    options.tolerance = params.Get("tolerance", options.tolerance);
    options.max_iterations = params.Get("max_iterations", options.max_iterations);
    if (!(options.damping >= 0.0 && options.damping < 1.0)) {
      throw std::invalid_argument("pagerank: damping must lie in [0,1)");
    }
    if (options.max_iterations < 1) {
      throw std::invalid_argument("pagerank: max_iterations must be >= 1");
    }
    out.fn = [options](const GcnModel& m, const ComputationGraph& cg, NodeId t, int y,
                       std::uint64_t s) { return explain_pagerank(m, cg, t, y, s, options); };
  } else if (spec.name == "integrated_gradients") {
    const int steps = params.Get("steps", 50);
    if (steps < 1) throw std::invalid_argument("integrated_gradients: steps must be >= 1");
    out.fn = [steps](const GcnModel& m, const ComputationGraph& cg, NodeId t, int y,
                     std::uint64_t s) { return explain_integrated_gradients(m, cg, t, y, s, steps); };
  } else if (spec.name == "gnnexplainer" || spec.name == "basic_gnnexplainer") {
    GnnExplainerOptions options;
    options.feature_mask = spec.name == "gnnexplainer";
    options.epochs = params.Get("epochs", options.epochs);
    options.learning_rate = params.Get("learning_rate", options.learning_rate);
    options.size_coef = params.Get("size_coef", options.size_coef);
    options.entropy_coef = params.Get("entropy_coef", options.entropy_coef);
    options.init_mean = params.Get("init_mean", options.init_mean);
    options.init_std = params.Get("init_std", options.init_std);
    if (options.feature_mask) {
      options.feature_size_coef = params.Get("feature_size_coef", options.feature_size_coef);
      options.feature_entropy_coef =
          params.Get("feature_entropy_coef", options.feature_entropy_coef);
    }
    if (options.epochs < 0) throw std::invalid_argument(spec.name + ": epochs must be >= 0");
    if (!(options.learning_rate > 0.0)) {
      throw std::invalid_argument(spec.name + ": learning_rate must be positive");
    }
    out.fn = [options](const GcnModel& m, const ComputationGraph& cg, NodeId t, int y,
                       std::uint64_t s) { return explain_gnnexplainer(m, cg, t, y, s, options); };
  } else {
    throw std::invalid_argument("unknown explainer '" + spec.name + "'");
  }
  params.Finish();
  return out;
}

}  // namespace gnnx
