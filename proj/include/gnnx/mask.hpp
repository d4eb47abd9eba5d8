#ifndef GNNX_MASK_HPP_
#define GNNX_MASK_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gnnx/graph.hpp"

namespace gnnx {

// Phenomenon explains the true label y, model explains the prediction y-hat.
enum class Focus { kPhenomenon, kModel };
enum class MaskNature { kHard, kSoft };

std::string_view to_string(Focus focus);
std::string_view to_string(MaskNature nature);
Focus parse_focus(std::string_view text);
MaskNature parse_mask_nature(std::string_view text);

// Min-max rescale into [0,1]. All-equal input maps to all ones. Throws
// std::invalid_argument on NaN or infinite values.
std::vector<double> normalize(std::span<const double> raw);

// Edge (u,v) gets (score[u] + score[v]) / 2, then the result is normalized.
std::vector<double> node_to_edge(std::span<const double> node_scores, const Graph& g);

// A rule bounding the size of an explanation.
struct Transform {
  enum class Kind { kTopK, kThreshold, kSparsity };

  Kind kind = Kind::kTopK;
  int k = 10;             // kTopK
  bool directed = false;  // kTopK: count edges instead of connections
  double value = 0.0;     // threshold tau or sparsity X

  static Transform TopK(int k, bool directed = false);
  static Transform Threshold(double tau);
  static Transform Sparsity(double x);

  // "topk_undirected", "topk_directed", "threshold=0.5", "sparsity=0.7".
  // The topk forms omit k; it is carried separately.
  std::string ToString() const;
  static Transform Parse(std::string_view text);
  void Validate() const;
};

// Zeroes every entry the strategy does not keep; kept entries retain their
// values. Undirected topk ranks connections by the larger of their two
// entries and needs `edge_pair` (Graph::edge_pair()). Ties go to the lower
// edge (or pair) index. Only nonzero entries are ever selected.
std::vector<double> transform(std::span<const double> mask, const Transform& strategy,
                              std::span<const std::size_t> edge_pair = {});

// Positive entries become 1.
std::vector<double> harden(std::span<const double> mask);

// 1 - m elementwise.
std::vector<double> complement_mask(std::span<const double> mask);

// Node-feature mask: either one row broadcast to every node, or one row per
// node.
struct FeatureMask {
  Matrix values;
};

struct MaskedInput {
  std::vector<double> edge_weights;
  Matrix features;
};

// Multiplies the mask into the graph's edge weights and, if given, the
// feature mask into its features. Throws std::invalid_argument on
// misaligned shapes or values outside [0,1].
MaskedInput apply_mask(const Graph& g, std::span<const double> mask,
                       const FeatureMask* feature_mask = nullptr);

struct Explanation {
  std::string explainer;
  NodeId target = 0;  // id in the parent graph
  int target_label = 0;
  Focus focus = Focus::kModel;
  std::vector<double> edge_mask;  // normalized, aligned to the computation graph
  std::optional<FeatureMask> feature_mask;
  double time_ms = 0.0;
};

// {target, explainer, focus, target_label, edges: [[src,dst,weight],...],
//  feature_mask?, time_ms}; edge endpoints use parent-graph ids.
nlohmann::json explanation_to_json(const Explanation& explanation,
                                   const ComputationGraph& cg);
// Throws std::invalid_argument if the edges do not match the computation
// graph.
Explanation explanation_from_json(const nlohmann::json& j, const ComputationGraph& cg);

}  // namespace gnnx

#endif  // GNNX_MASK_HPP_
