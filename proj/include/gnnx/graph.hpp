#ifndef GNNX_GRAPH_HPP_
#define GNNX_GRAPH_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gnnx {

// Row-major so that a node's feature row is contiguous.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

using NodeId = int;
using EdgeIndex = std::size_t;

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class Split : std::uint8_t { kTrain, kVal, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

// Hop count returned for nodes that cannot be reached.
inline constexpr int kUnreachable = std::numeric_limits<int>::max();

// Immutable sparse directed graph with node features, labels and splits.
//
// Edges are kept sorted by (src, dst). An undirected graph stores both
// directions of every connection. Masks elsewhere in the library are dense
// per-edge vectors aligned with this order.
class Graph {
 public:
  Graph() = default;

  // Validates and canonicalizes the inputs. When `undirected` is set, the
  // reciprocal of every edge is added if missing. Throws
  // std::invalid_argument on self-loops, duplicate edges, out-of-range node
  // ids, dimension mismatches or weights outside [0,1]. `num_classes` defaults
  // to max(label) + 1.
  static Graph Build(std::vector<Edge> edges, Matrix features,
                     std::vector<int> labels, std::vector<Split> splits,
                     bool undirected,
                     std::optional<std::vector<double>> edge_weights = {},
                     std::optional<int> num_classes = {});

  int num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  int feature_dim() const { return static_cast<int>(features_.cols()); }
  int num_classes() const { return num_classes_; }
  bool undirected() const { return undirected_; }

  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(EdgeIndex e) const { return edges_[e]; }
  const Matrix& features() const { return features_; }
  std::span<const int> labels() const { return labels_; }
  std::span<const Split> splits() const { return splits_; }

  bool has_edge_weights() const { return has_edge_weights_; }
  // All 1.0 when the graph was built without weights.
  std::span<const double> edge_weights() const { return edge_weights_; }

  // Edges leaving `v` occupy the contiguous index range returned here.
  std::pair<EdgeIndex, EdgeIndex> out_edge_range(NodeId v) const {
    return {out_offsets_[v], out_offsets_[v + 1]};
  }
  // Indices of edges entering `v`, ascending.
  std::span<const EdgeIndex> in_edges(NodeId v) const {
    return {in_edges_.data() + in_offsets_[v],
            in_offsets_[v + 1] - in_offsets_[v]};
  }
  int in_degree(NodeId v) const {
    return static_cast<int>(in_offsets_[v + 1] - in_offsets_[v]);
  }

  std::optional<EdgeIndex> find_edge(NodeId src, NodeId dst) const;
  // Index of (dst, src) for edge (src, dst), if stored.
  std::optional<EdgeIndex> reverse_edge(EdgeIndex e) const {
    return reverse_[e] == kNoReverse ? std::nullopt
                                     : std::optional<EdgeIndex>(reverse_[e]);
  }

  // Groups edges into connections: an edge and its reciprocal share a pair.
  // Pairs are numbered in order of their lowest edge index.
  const std::vector<std::size_t>& edge_pair() const { return edge_pair_; }
  std::size_t num_pairs() const { return num_pairs_; }

 private:
  static constexpr EdgeIndex kNoReverse = std::numeric_limits<EdgeIndex>::max();

  void BuildIndex();

  int num_nodes_ = 0;
  int num_classes_ = 0;
  bool undirected_ = false;
  bool has_edge_weights_ = false;
  std::vector<Edge> edges_;
  std::vector<double> edge_weights_;
  Matrix features_;
  std::vector<int> labels_;
  std::vector<Split> splits_;

  std::vector<EdgeIndex> out_offsets_;
  std::vector<EdgeIndex> in_offsets_;
  std::vector<EdgeIndex> in_edges_;
  std::vector<EdgeIndex> reverse_;
  std::vector<std::size_t> edge_pair_;
  std::size_t num_pairs_ = 0;
};

// Induced L-hop neighbourhood of a target node.
//
// node_map is sorted ascending, so local edge order agrees with global edge
// order. parent_in_degree keeps each node's in-degree in the parent graph so
// that propagation over the subgraph normalizes exactly like the full graph.
struct ComputationGraph {
  Graph subgraph;
  std::vector<NodeId> node_map;
  std::vector<EdgeIndex> edge_map;
  std::vector<int> parent_in_degree;
  NodeId target = 0;
  NodeId target_local = 0;
};

// Nodes within `hops` undirected steps of `target` plus every edge among them.
ComputationGraph k_hop_subgraph(const Graph& g, NodeId target, int hops);

// Directed BFS following edge direction. Unreachable nodes get kUnreachable.
std::vector<int> bfs_distances(const Graph& g, NodeId source);

// Components of the undirected graph spanned by the endpoints of `edges`.
std::size_t connected_components(std::span<const Edge> edges);

}  // namespace gnnx

#endif  // GNNX_GRAPH_HPP_
