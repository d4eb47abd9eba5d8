#include "gnnx/graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace gnnx {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + std::string(text) + "'");
}

Graph Graph::Build(std::vector<Edge> edges, Matrix features,
                   std::vector<int> labels, std::vector<Split> splits,
                   bool undirected, std::optional<std::vector<double>> edge_weights,
                   std::optional<int> num_classes) {
  const auto n = static_cast<int>(features.rows());
  if (labels.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("labels has " + std::to_string(labels.size()) +
                                " entries for " + std::to_string(n) + " nodes");
  }
  if (splits.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("splits has " + std::to_string(splits.size()) +
                                " entries for " + std::to_string(n) + " nodes");
  }
  if (edge_weights && edge_weights->size() != edges.size()) {
    throw std::invalid_argument("edge_weights length does not match edges");
  }

  struct Entry {
    Edge edge;
    double weight;
  };
  std::vector<Entry> entries;
  entries.reserve(undirected ? 2 * edges.size() : edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      throw std::invalid_argument("edge (" + std::to_string(e.src) + "," +
                                  std::to_string(e.dst) +
                                  ") references a node outside [0," +
                                  std::to_string(n) + ")");
    }
    if (e.src == e.dst) {
      throw std::invalid_argument("self-loop on node " + std::to_string(e.src));
    }
    const double w = edge_weights ? (*edge_weights)[i] : 1.0;
    if (!(w >= 0.0 && w <= 1.0)) {
      throw std::invalid_argument("edge weight outside [0,1]");
    }
    entries.push_back({e, w});
  }
  auto by_edge = [](const Entry& a, const Entry& b) { return a.edge < b.edge; };
  std::sort(entries.begin(), entries.end(), by_edge);
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].edge == entries[i - 1].edge) {
      throw std::invalid_argument(
          "duplicate edge (" + std::to_string(entries[i].edge.src) + "," +
          std::to_string(entries[i].edge.dst) + ")");
    }
  }
  if (undirected) {
    const std::size_t original = entries.size();
    for (std::size_t i = 0; i < original; ++i) {
      const Entry reversed{{entries[i].edge.dst, entries[i].edge.src},
                           entries[i].weight};
      if (!std::binary_search(entries.begin(), entries.begin() + original,
                              reversed, by_edge)) {
        entries.push_back(reversed);
      }
    }
    std::sort(entries.begin(), entries.end(), by_edge);
  }

  Graph g;
  g.num_nodes_ = n;
  g.undirected_ = undirected;
  g.has_edge_weights_ = edge_weights.has_value();
  g.edges_.reserve(entries.size());
  g.edge_weights_.reserve(entries.size());
  for (const auto& entry : entries) {
    g.edges_.push_back(entry.edge);
    g.edge_weights_.push_back(entry.weight);
  }
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  g.splits_ = std::move(splits);
  int max_label = -1;
  for (int label : g.labels_) {
    if (label < 0) throw std::invalid_argument("negative class label");
    max_label = std::max(max_label, label);
  }
  g.num_classes_ = num_classes.value_or(max_label + 1);
  if (g.num_classes_ <= max_label) {
    throw std::invalid_argument("label " + std::to_string(max_label) +
                                " exceeds num_classes " +
                                std::to_string(g.num_classes_));
  }
  g.BuildIndex();
  return g;
}

void Graph::BuildIndex() {
  const auto n = static_cast<std::size_t>(num_nodes_);
  out_offsets_.assign(n + 1, 0);
  in_offsets_.assign(n + 1, 0);
  for (const Edge& e : edges_) {
    ++out_offsets_[e.src + 1];
    ++in_offsets_[e.dst + 1];
  }
  std::partial_sum(out_offsets_.begin(), out_offsets_.end(), out_offsets_.begin());
  std::partial_sum(in_offsets_.begin(), in_offsets_.end(), in_offsets_.begin());
  in_edges_.resize(edges_.size());
  std::vector<EdgeIndex> cursor(in_offsets_.begin(), in_offsets_.end() - 1);
  for (EdgeIndex e = 0; e < edges_.size(); ++e) {
    in_edges_[cursor[edges_[e].dst]++] = e;
  }

  reverse_.assign(edges_.size(), kNoReverse);
  edge_pair_.assign(edges_.size(), 0);
  num_pairs_ = 0;
  std::vector<bool> assigned(edges_.size(), false);
  for (EdgeIndex e = 0; e < edges_.size(); ++e) {
    if (auto r = find_edge(edges_[e].dst, edges_[e].src)) reverse_[e] = *r;
    if (assigned[e]) continue;
    edge_pair_[e] = num_pairs_;
    assigned[e] = true;
    if (reverse_[e] != kNoReverse) {
      edge_pair_[reverse_[e]] = num_pairs_;
      assigned[reverse_[e]] = true;
    }
    ++num_pairs_;
  }
}

std::optional<EdgeIndex> Graph::find_edge(NodeId src, NodeId dst) const {
  if (src < 0 || src >= num_nodes_) return std::nullopt;
  const auto [begin, end] = out_edge_range(src);
  auto first = edges_.begin() + static_cast<std::ptrdiff_t>(begin);
  auto last = edges_.begin() + static_cast<std::ptrdiff_t>(end);
  auto it = std::lower_bound(first, last, Edge{src, dst});
  if (it == last || it->dst != dst) return std::nullopt;
  return static_cast<EdgeIndex>(it - edges_.begin());
}

ComputationGraph k_hop_subgraph(const Graph& g, NodeId target, int hops) {
  if (target < 0 || target >= g.num_nodes()) {
    throw std::out_of_range("target node " + std::to_string(target) +
                            " outside graph of " +
                            std::to_string(g.num_nodes()) + " nodes");
  }
  if (hops < 1) throw std::invalid_argument("hops must be at least 1");

  std::vector<int> depth(g.num_nodes(), kUnreachable);
  std::deque<NodeId> frontier{target};
  depth[target] = 0;
  std::vector<NodeId> reached{target};
  auto visit = [&](NodeId from, NodeId to) {
    if (depth[to] != kUnreachable) return;
    depth[to] = depth[from] + 1;
    reached.push_back(to);
    if (depth[to] < hops) frontier.push_back(to);
  };
  while (!frontier.empty()) {
    const NodeId v = frontier.front();
    frontier.pop_front();
    const auto [begin, end] = g.out_edge_range(v);
    for (EdgeIndex e = begin; e < end; ++e) visit(v, g.edge(e).dst);
    for (EdgeIndex e : g.in_edges(v)) visit(v, g.edge(e).src);
  }
  std::sort(reached.begin(), reached.end());

  ComputationGraph cg;
  cg.target = target;
  cg.node_map = reached;
  std::unordered_map<NodeId, NodeId> local;
  local.reserve(reached.size());
  for (std::size_t i = 0; i < reached.size(); ++i) {
    local.emplace(reached[i], static_cast<NodeId>(i));
  }
  cg.target_local = local.at(target);

  const auto m = static_cast<Eigen::Index>(reached.size());
  Matrix features(m, g.feature_dim());
  std::vector<int> labels(reached.size());
  std::vector<Split> splits(reached.size());
  cg.parent_in_degree.resize(reached.size());
  for (std::size_t i = 0; i < reached.size(); ++i) {
    const NodeId v = reached[i];
    features.row(static_cast<Eigen::Index>(i)) = g.features().row(v);
    labels[i] = g.labels()[v];
    splits[i] = g.splits()[v];
    cg.parent_in_degree[i] = g.in_degree(v);
  }

  std::vector<Edge> edges;
  std::vector<double> weights;
  for (NodeId v : reached) {
    const auto [begin, end] = g.out_edge_range(v);
    for (EdgeIndex e = begin; e < end; ++e) {
      auto it = local.find(g.edge(e).dst);
      if (it == local.end()) continue;
      edges.push_back({local.at(v), it->second});
      weights.push_back(g.edge_weights()[e]);
      cg.edge_map.push_back(e);
    }
  }
  std::optional<std::vector<double>> maybe_weights;
  if (g.has_edge_weights()) maybe_weights = std::move(weights);
  cg.subgraph = Graph::Build(std::move(edges), std::move(features),
                             std::move(labels), std::move(splits),
                             g.undirected(), std::move(maybe_weights),
                             g.num_classes());
  return cg;
}

std::vector<int> bfs_distances(const Graph& g, NodeId source) {
  if (source < 0 || source >= g.num_nodes()) {
    throw std::out_of_range("source node " + std::to_string(source) +
                            " outside graph of " +
                            std::to_string(g.num_nodes()) + " nodes");
  }
  std::vector<int> dist(g.num_nodes(), kUnreachable);
  std::deque<NodeId> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    const auto [begin, end] = g.out_edge_range(v);
    for (EdgeIndex e = begin; e < end; ++e) {
      const NodeId u = g.edge(e).dst;
      if (dist[u] == kUnreachable) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
    }
  }
  return dist;
}

namespace {

class DisjointSets {
 public:
  NodeId Find(NodeId v) {
    auto [it, inserted] = parent_.try_emplace(v, v);
    if (inserted) {
      ++sets_;
      return v;
    }
    NodeId root = it->second;
    while (root != parent_[root]) root = parent_[root];
    // Path compression.
    while (v != root) {
      NodeId next = parent_[v];
      parent_[v] = root;
      v = next;
    }
    return root;
  }

  void Union(NodeId a, NodeId b) {
    a = Find(a);
    b = Find(b);
    if (a == b) return;
    parent_[std::max(a, b)] = std::min(a, b);
    --sets_;
  }

  std::size_t sets() const { return sets_; }

 private:
  std::unordered_map<NodeId, NodeId> parent_;
  std::size_t sets_ = 0;
};

}  // namespace

std::size_t connected_components(std::span<const Edge> edges) {
  DisjointSets sets;
  for (const Edge& e : edges) sets.Union(e.src, e.dst);
  return sets.sets();
}

}  // namespace gnnx
