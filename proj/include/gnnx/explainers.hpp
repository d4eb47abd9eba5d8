#ifndef GNNX_EXPLAINERS_HPP_
#define GNNX_EXPLAINERS_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gnnx/gcn.hpp"
#include "gnnx/graph.hpp"
#include "gnnx/mask.hpp"

namespace gnnx {

// Every explainer takes the target's computation graph, the target (parent
// id, must equal cg.target) and the label to explain, and returns a
// normalized edge mask aligned with cg.subgraph's edges. Results are a
// deterministic function of the arguments. time_ms covers the whole call.

Explanation explain_random(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                           int target_label, std::uint64_t seed);

// Node score 1 / (1 + hops from the target), 0 when unreachable.
Explanation explain_distance(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                             int target_label, std::uint64_t seed);

struct PageRankOptions {
  double damping = 0.85;
  double tolerance = 1e-10;  // L1 change between iterations
  int max_iterations = 200;
};

// Personalized PageRank scores restarting at `restart`. Mass on nodes
// without out-edges is returned to `restart`. Scores sum to 1.
std::vector<double> personalized_pagerank(const Graph& g, NodeId restart,
                                          const PageRankOptions& options = {});

Explanation explain_pagerank(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                             int target_label, std::uint64_t seed,
                             const PageRankOptions& options = {});

// d logit[target_local, label] / d features, using the graph's own weights.
Matrix feature_gradient(const GcnModel& model, const ComputationGraph& cg, int label);

// Node score: L1 norm of the logit's gradient w.r.t. the node's features.
Explanation explain_saliency(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                             int target_label, std::uint64_t seed);

// Per-entry attributions X * mean_i grad(alpha_i X) with alpha_i = (i + 0.5)
// / steps and a zero baseline.
Matrix integrated_gradients(const GcnModel& model, const ComputationGraph& cg, int label,
                            int steps);

Explanation explain_integrated_gradients(const GcnModel& model, const ComputationGraph& cg,
                                         NodeId target, int target_label, std::uint64_t seed,
                                         int steps = 50);

// H is the activation entering the last convolution and alpha_c the mean over
// nodes of d logit / d H[., c], counting every path from H to the logit.
// Node score ReLU(sum_c alpha_c H[v,c]).
struct GradCam {
  Matrix activation;
  RowVector alpha;
  std::vector<double> node_scores;
};

GradCam gradcam(const GcnModel& model, const ComputationGraph& cg, int label);

// All-zero node scores give an all-zero mask.
Explanation explain_gradcam(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                            int target_label, std::uint64_t seed);

// Probability drop of the target label when both directions of a connection
// are removed; negative drops count as 0.
Explanation explain_occlusion(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                              int target_label, std::uint64_t seed);

struct GnnExplainerOptions {
  bool feature_mask = true;  // false gives the edge-only variant
  int epochs = 100;
  double learning_rate = 0.01;
  double size_coef = 0.005;
  double entropy_coef = 1.0;
  double feature_size_coef = 1.0;
  double feature_entropy_coef = 0.1;
  double init_mean = 1.0;
  double init_std = 0.1;
};

// Learns one sigmoid-gated logit per connection (and per feature column when
// feature_mask is set) by Adam on -log p(label) plus size and entropy
// penalties. `loss_history`, if given, receives the loss at every epoch plus
// the loss after the final update. Throws std::runtime_error if the loss
// becomes non-finite.
Explanation explain_gnnexplainer(const GcnModel& model, const ComputationGraph& cg,
                                 NodeId target, int target_label, std::uint64_t seed,
                                 const GnnExplainerOptions& options = {},
                                 std::vector<double>* loss_history = nullptr);

// Name plus tuning parameters, e.g. {"name": "pagerank", "params":
// {"damping": 0.9}}.
struct ExplainerSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();

  static ExplainerSpec FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

using ExplainFn = std::function<Explanation(const GcnModel&, const ComputationGraph&, NodeId,
                                            int, std::uint64_t)>;

struct Explainer {
  std::string name;
  ExplainFn fn;

  Explanation operator()(const GcnModel& model, const ComputationGraph& cg, NodeId target,
                         int target_label, std::uint64_t seed) const {
    return fn(model, cg, target, target_label, seed);
  }
};

// Throws std::invalid_argument for unknown names, unknown parameters or
// invalid parameter values.
Explainer make_explainer(const ExplainerSpec& spec);

// random, distance, pagerank, saliency, integrated_gradients, gradcam,
// occlusion, gnnexplainer, basic_gnnexplainer.
const std::vector<std::string>& explainer_names();

}  // namespace gnnx

#endif  // GNNX_EXPLAINERS_HPP_
