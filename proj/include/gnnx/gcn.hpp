#ifndef GNNX_GCN_HPP_
#define GNNX_GCN_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gnnx/graph.hpp"

namespace gnnx {

// Symmetrically normalized adjacency with self-loops, D^-1/2 (A_w + I) D^-1/2.
//
// Degrees come from the unweighted structure (in-degree + 1), so edge weights
// scale the message on an edge without renormalizing its endpoints. Row index
// is the receiving node (dst).
struct NormalizedAdjacency {
  int num_nodes = 0;
  std::vector<Edge> edges;
  std::vector<double> edge_norm;   // 1 / sqrt(deg(src) * deg(dst))
  std::vector<double> edge_value;  // weight * edge_norm
  std::vector<double> self_loop;   // 1 / deg(v)

  Matrix ToDense() const;
};

// Throws std::invalid_argument if a weight falls outside [0,1] or the
// weights are not aligned with the graph's edges.
NormalizedAdjacency normalize_adjacency(const Graph& g,
                                        std::span<const double> edge_weights);
// Same, normalizing with the degrees of the parent graph.
NormalizedAdjacency normalize_adjacency(const ComputationGraph& cg,
                                        std::span<const double> edge_weights);

struct ModelShape {
  int input_dim = 10;
  int hidden_dim = 20;
  int num_layers = 3;
  int num_classes = 2;
  double dropout = 0.0;
  // Concatenate every convolution's output and map it to logits with a
  // dense layer instead of using the last convolution as the classifier.
  bool concat_readout = true;
};

struct GcnLayer {
  Matrix weight;  // in_dim x out_dim
  RowVector bias;
};

// Stack of graph convolutions with ReLU between them. Without a readout the
// last convolution produces the logits. With a readout, the outputs of all
// convolutions (the last one left linear) are concatenated per node and a
// dense layer maps them to logits.
class GcnModel {
 public:
  GcnModel() = default;
  GcnModel(std::vector<GcnLayer> layers, double dropout,
           std::optional<GcnLayer> readout = std::nullopt);

  // Glorot-uniform weights; biases uniform in +-1/sqrt(fan_in).
  static GcnModel Initialize(const ModelShape& shape, std::uint64_t seed);

  int num_layers() const { return static_cast<int>(layers_.size()); }
  int input_dim() const { return static_cast<int>(layers_.front().weight.rows()); }
  int num_classes() const;
  double dropout() const { return dropout_; }
  bool has_readout() const { return readout_.has_value(); }
  // Convolution widths, input first: {in, h1, ..., out}.
  std::vector<int> dims() const;

  const std::vector<GcnLayer>& layers() const { return layers_; }
  std::vector<GcnLayer>& mutable_layers() { return layers_; }
  const std::optional<GcnLayer>& readout() const { return readout_; }
  std::optional<GcnLayer>& mutable_readout() { return readout_; }

 private:
  std::vector<GcnLayer> layers_;
  double dropout_ = 0.0;
  std::optional<GcnLayer> readout_;
};

// Activations cached for the backward pass.
struct ForwardPass {
  // inputs[l] feeds convolution l. With a readout, one extra entry holds the
  // last convolution's output.
  std::vector<Matrix> inputs;
  std::vector<Matrix> projected;      // inputs[l] * W_l
  std::vector<Matrix> preactivation;  // A * projected[l] + b_l
  std::vector<Matrix> dropout_scale;  // empty when no dropout was applied
  Matrix readout_input;  // concatenated convolution outputs; empty without a readout
  Matrix logits;
};

ForwardPass forward(const GcnModel& model, const NormalizedAdjacency& adj,
                    const Matrix& features, bool train_mode = false,
                    std::uint64_t seed = 0);

// Logits of one node, evaluating only the rows its output depends on.
// Bitwise equal to forward(...).logits.row(node).
RowVector forward_node(const GcnModel& model, const NormalizedAdjacency& adj,
                       const Matrix& features, NodeId node);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;
  Matrix readout_weight;  // empty without a readout
  RowVector readout_bias;
  Matrix features;
  std::vector<double> edge_weights;
  // d/d inputs[l] for every convolution.
  std::vector<Matrix> layer_inputs;
};

// Reverse-mode pass from d(objective)/d(logits).
Gradients backward(const GcnModel& model, const NormalizedAdjacency& adj,
                   const ForwardPass& pass, const Matrix& grad_logits);

struct LossAndGrads {
  double loss = 0.0;
  Gradients grads;
  Matrix logits;
};

// Mean cross-entropy over `nodes` plus weight_decay * 0.5 * sum ||W_l||^2.
LossAndGrads loss_and_grads(const GcnModel& model, const NormalizedAdjacency& adj,
                            const Matrix& features, std::span<const int> targets,
                            std::span<const NodeId> nodes, double weight_decay = 0.0,
                            bool train_mode = false, std::uint64_t seed = 0);

Matrix softmax_rows(const Matrix& logits);
// Row argmax, lowest index on ties.
std::vector<int> argmax_rows(const Matrix& m);

struct Prediction {
  std::vector<int> labels;
  Matrix probs;
};

Prediction predict(const GcnModel& model, const Graph& g,
                   std::span<const double> edge_weights);
Prediction predict(const GcnModel& model, const NormalizedAdjacency& adj,
                   const Matrix& features);

struct TrainConfig {
  int epochs = 1000;
  double learning_rate = 0.001;
  double weight_decay = 5e-3;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void Validate() const;
};

struct ModelReport {
  double accuracy = 0.0;
  double f1_macro = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  int best_epoch = 0;
};

ModelReport evaluate_split(const GcnModel& model, const Graph& g, Split split);

struct TrainResult {
  GcnModel model;
  ModelReport report;
};

// Full-batch Adam on the train split. Returns the epoch with the best
// validation accuracy (latest on ties). Throws std::runtime_error if the loss
// becomes non-finite.
TrainResult train(const Graph& g, const ModelShape& shape, const TrainConfig& cfg);

// Checkpoint layout: "GNNX", u32 version, u32 length + JSON metadata, then per
// layer the row-major weights followed by the bias, as little-endian f64.
void save_checkpoint(const GcnModel& model, const std::filesystem::path& path);
GcnModel load_checkpoint(const std::filesystem::path& path);
// Also checks that the stored layer widths equal `expected_dims`.
GcnModel load_checkpoint(const std::filesystem::path& path,
                         const std::vector<int>& expected_dims);

}  // namespace gnnx

#endif  // GNNX_GCN_HPP_
