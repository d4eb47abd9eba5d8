#include <algorithm>
#include <map>
#include <numeric>
#include <queue>
#include <set>

#include <gtest/gtest.h>

#include "gnnx/bundle.hpp"
#include "gnnx/graph.hpp"
#include "gnnx/random.hpp"
#include "gnnx/synthetic.hpp"
#include "test_util.hpp"

namespace gnnx {
namespace {

Graph path_graph(int n, bool undirected = true) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Graph::Build(edges, Matrix::Ones(n, 1), std::vector<int>(n, 0),
                      std::vector<Split>(n, Split::kTrain), undirected);
}

TEST(GraphBuild, StoresReciprocalEdges) {
  const auto g = Graph::Build({{0, 1}}, Matrix::Ones(2, 1), {0, 0},
                              {Split::kTrain, Split::kTest}, true);
  ASSERT_EQ(g.num_edges(), 2u);
  EXPECT_EQ(g.edge(0), (Edge{0, 1}));
  EXPECT_EQ(g.edge(1), (Edge{1, 0}));
  EXPECT_EQ(g.num_pairs(), 1u);
  EXPECT_EQ(*g.reverse_edge(0), 1u);
}

TEST(GraphBuild, RejectsBadInput) {
  const Matrix x = Matrix::Ones(2, 1);
  const std::vector<Split> s(2, Split::kTrain);
  EXPECT_THROW(Graph::Build({{0, 0}}, x, {0, 0}, s, true), std::invalid_argument);
  EXPECT_THROW(Graph::Build({{0, 1}, {0, 1}}, x, {0, 0}, s, false), std::invalid_argument);
  EXPECT_THROW(Graph::Build({{0, 2}}, x, {0, 0}, s, false), std::invalid_argument);
  EXPECT_THROW(Graph::Build({{0, 1}}, x, {0}, s, false), std::invalid_argument);
  EXPECT_THROW(Graph::Build({{0, 1}}, x, {0, 0}, s, false, std::vector<double>{1.5}),
               std::invalid_argument);
}

TEST(GraphBuild, SortsEdgesAndIndexesThem) {
  Rng rng(7);
  const auto g = testing::random_graph(rng, 20, 60, 2, 3, false);
  EXPECT_TRUE(std::is_sorted(g.edges().begin(), g.edges().end()));
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    const auto [lo, hi] = g.out_edge_range(v);
    for (auto e = lo; e < hi; ++e) EXPECT_EQ(g.edge(e).src, v);
    for (auto e : g.in_edges(v)) EXPECT_EQ(g.edge(e).dst, v);
  }
  for (EdgeIndex e = 0; e < g.num_edges(); ++e) {
    EXPECT_EQ(g.find_edge(g.edge(e).src, g.edge(e).dst), e);
  }
}

TEST(KHopSubgraph, PathTwoHops) {
  const auto g = path_graph(4);
  const auto cg = k_hop_subgraph(g, 0, 2);
  EXPECT_EQ(cg.node_map, (std::vector<NodeId>{0, 1, 2}));
  std::vector<Edge> edges(cg.subgraph.edges().begin(), cg.subgraph.edges().end());
  EXPECT_EQ(edges, (std::vector<Edge>{{0, 1}, {1, 0}, {1, 2}, {2, 1}}));
  EXPECT_EQ(cg.target_local, 0);
  EXPECT_EQ(cg.parent_in_degree, (std::vector<int>{1, 2, 2}));
}

TEST(KHopSubgraph, IsolatedTarget) {
  const auto g = Graph::Build({{1, 2}}, Matrix::Ones(3, 1), {0, 0, 0},
                              std::vector<Split>(3, Split::kTrain), true);
  const auto cg = k_hop_subgraph(g, 0, 3);
  EXPECT_EQ(cg.subgraph.num_nodes(), 1);
  EXPECT_EQ(cg.subgraph.num_edges(), 0u);
}

TEST(KHopSubgraph, MatchesBfsOracleAndContainsHouse) {
  const auto data = generate(named_spec("ba_house", 0));
  const auto& g = data.graph;
  for (NodeId target : {300, 333, 512, 17}) {
    // Undirected BFS oracle.
    std::vector<int> dist(g.num_nodes(), -1);
    std::queue<NodeId> q;
    dist[target] = 0;
    q.push(target);
    while (!q.empty()) {
      const NodeId u = q.front();
      q.pop();
      const auto [lo, hi] = g.out_edge_range(u);
      for (auto e = lo; e < hi; ++e) {
        const NodeId v = g.edge(e).dst;
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
      }
    }
    std::vector<NodeId> expected;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      if (dist[v] >= 0 && dist[v] <= 3) expected.push_back(v);
    }
    const auto cg = k_hop_subgraph(g, target, 3);
    EXPECT_EQ(cg.node_map, expected);
    std::size_t inner = 0;
    for (const auto& e : g.edges()) {
      if (std::binary_search(expected.begin(), expected.end(), e.src) &&
          std::binary_search(expected.begin(), expected.end(), e.dst)) {
        ++inner;
      }
    }
    EXPECT_EQ(cg.subgraph.num_edges(), inner);
    for (EdgeIndex e = 0; e < cg.subgraph.num_edges(); ++e) {
      const auto& local = cg.subgraph.edge(e);
      const auto& global = g.edge(cg.edge_map[e]);
      EXPECT_EQ(cg.node_map[local.src], global.src);
      EXPECT_EQ(cg.node_map[local.dst], global.dst);
    }
    const int motif = data.truth.motif_of[target];
    if (motif >= 0) {
      for (NodeId m : data.truth.members[motif]) {
        EXPECT_TRUE(std::binary_search(cg.node_map.begin(), cg.node_map.end(), m));
      }
    }
  }
}

TEST(BfsDistances, StarAndDisconnected) {
  const auto g = Graph::Build({{0, 1}, {0, 2}, {0, 3}}, Matrix::Ones(5, 1), {0, 0, 0, 0, 0},
                              std::vector<Split>(5, Split::kTrain), true);
  const auto d = bfs_distances(g, 0);
  EXPECT_EQ(d[0], 0);
  EXPECT_EQ(d[1], 1);
  EXPECT_EQ(d[2], 1);
  EXPECT_EQ(d[3], 1);
  EXPECT_EQ(d[4], kUnreachable);
}

TEST(BfsDistances, CycleOfSix) {
  std::vector<Edge> edges;
  for (int i = 0; i < 6; ++i) edges.push_back({i, (i + 1) % 6});
  const auto g = Graph::Build(edges, Matrix::Ones(6, 1), std::vector<int>(6, 0),
                              std::vector<Split>(6, Split::kTrain), true);
  EXPECT_EQ(bfs_distances(g, 0), (std::vector<int>{0, 1, 2, 3, 2, 1}));
}

TEST(BfsDistances, FollowsEdgeDirection) {
  const auto g = path_graph(3, false);
  EXPECT_EQ(bfs_distances(g, 2), (std::vector<int>{kUnreachable, kUnreachable, 0}));
}

TEST(ConnectedComponents, Examples) {
  EXPECT_EQ(connected_components({}), 0u);
  const std::vector<Edge> chain{{0, 1}, {1, 2}};
  EXPECT_EQ(connected_components(chain), 1u);
  const std::vector<Edge> three{{0, 1}, {2, 3}, {4, 5}};
  EXPECT_EQ(connected_components(three), 3u);
}

std::size_t dfs_components(std::span<const Edge> edges) {
  std::map<NodeId, std::vector<NodeId>> adj;
  for (const auto& e : edges) {
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  std::set<NodeId> seen;
  std::size_t count = 0;
  for (const auto& [start, unused] : adj) {
    if (seen.count(start)) continue;
    ++count;
    std::vector<NodeId> stack{start};
    seen.insert(start);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : adj[u]) {
        if (seen.insert(v).second) stack.push_back(v);
      }
    }
  }
  return count;
}

TEST(ConnectedComponents, MatchesDfsOnRandomEdgeSets) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 40));
    const int m = static_cast<int>(uniform_index(rng, 2 * n));
    std::vector<Edge> edges;
    for (int i = 0; i < m; ++i) {
      edges.push_back({static_cast<NodeId>(uniform_index(rng, n)),
                       static_cast<NodeId>(uniform_index(rng, n))});
    }
    EXPECT_EQ(connected_components(edges), dfs_components(edges)) << "trial " << trial;
  }
}

TEST(Bundle, RoundTrip) {
  Rng rng(5);
  const auto g = testing::random_graph(rng, 15, 40, 3, 2, true, true);
  const auto dir = testing::scratch_dir("bundle");
  write_bundle(g, dir, {{"note", "fixture"}});
  const auto back = read_bundle(dir);
  EXPECT_EQ(back.num_nodes(), g.num_nodes());
  EXPECT_TRUE(std::equal(g.edges().begin(), g.edges().end(), back.edges().begin(),
                         back.edges().end()));
  EXPECT_TRUE(std::equal(g.edge_weights().begin(), g.edge_weights().end(),
                         back.edge_weights().begin(), back.edge_weights().end()));
  EXPECT_EQ(back.features(), g.features());
  EXPECT_TRUE(std::equal(g.labels().begin(), g.labels().end(), back.labels().begin()));
  EXPECT_TRUE(std::equal(g.splits().begin(), g.splits().end(), back.splits().begin()));
  EXPECT_EQ(read_bundle_meta(dir).at("note"), "fixture");
}

TEST(Bundle, MissingFileIsAnError) {
  const auto dir = testing::scratch_dir("bundle_missing");
  EXPECT_ANY_THROW(read_bundle(dir));
}

}  // namespace
}  // namespace gnnx
