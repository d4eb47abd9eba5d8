#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "gnnx/mask.hpp"
#include "gnnx/random.hpp"
#include "test_util.hpp"

namespace gnnx {
namespace {

using V = std::vector<double>;

TEST(Normalize, MinMax) {
  EXPECT_EQ(normalize(V{2, 4, 6}), (V{0, 0.5, 1}));
  EXPECT_EQ(normalize(V{5, 5, 5}), (V{1, 1, 1}));
  EXPECT_EQ(normalize(V{-1, 0, 3}), (V{0, 0.25, 1}));
  EXPECT_TRUE(normalize(V{}).empty());
  EXPECT_THROW(normalize(V{1, NAN}), std::invalid_argument);
  EXPECT_THROW(normalize(V{1, INFINITY}), std::invalid_argument);
}

TEST(NodeToEdge, AveragesEndpoints) {
  // Directed path 0->1->2 with scores [1, 0.5, 0]: raw edge scores [0.75, 0.25].
  const auto g = Graph::Build({{0, 1}, {1, 2}}, Matrix::Ones(3, 1), {0, 0, 0},
                              std::vector<Split>(3, Split::kTrain), false);
  EXPECT_EQ(node_to_edge(V{1, 0.5, 0}, g), normalize(V{0.75, 0.25}));
  const auto pair = Graph::Build({{0, 1}, {1, 2}, {0, 2}}, Matrix::Ones(3, 1), {0, 0, 0},
                                 std::vector<Split>(3, Split::kTrain), false);
  // Sorted edges: (0,1), (0,2), (1,2).
  EXPECT_EQ(node_to_edge(V{1, 0, 0.5}, pair), normalize(V{0.5, 0.75, 0.25}));
  EXPECT_EQ(node_to_edge(V{0.3, 0.3, 0.3}, pair), (V{1, 1, 1}));
  EXPECT_THROW(node_to_edge(V{1, 0}, pair), std::invalid_argument);
}

TEST(Transform, TopKDirectedTieBreak) {
  EXPECT_EQ(transform(V{0.9, 0.1, 0.5, 0.5}, Transform::TopK(2, true)), (V{0.9, 0, 0.5, 0}));
}

TEST(Transform, ThresholdIsStrict) {
  EXPECT_EQ(transform(V{0.9, 0.1, 0.5}, Transform::Threshold(0.5)), (V{0.9, 0, 0}));
}

TEST(Transform, SparsityKeepsCeilingShare) {
  V mask(10);
  for (int i = 0; i < 10; ++i) mask[i] = 0.1 * (i + 1);
  const auto out = transform(mask, Transform::Sparsity(0.7));
  EXPECT_EQ(std::count_if(out.begin(), out.end(), [](double v) { return v > 0; }), 3);
  EXPECT_EQ(out[9], 1.0);
  EXPECT_EQ(out[8], mask[8]);
  EXPECT_EQ(out[7], mask[7]);
  // 0.65 of 10 keeps ceil(3.5) = 4.
  const auto four = transform(mask, Transform::Sparsity(0.65));
  EXPECT_EQ(std::count_if(four.begin(), four.end(), [](double v) { return v > 0; }), 4);
}

TEST(Transform, TopKNeverSelectsZeros) {
  EXPECT_EQ(transform(V{0, 0.2, 0}, Transform::TopK(3, true)), (V{0, 0.2, 0}));
}

TEST(Transform, UndirectedTopKCountsConnections) {
  // Edges (0,1),(1,0),(1,2),(2,1) form pairs 0,0,1,1.
  const auto g = Graph::Build({{0, 1}, {1, 2}}, Matrix::Ones(3, 1), {0, 0, 0},
                              std::vector<Split>(3, Split::kTrain), true);
  const V mask{0.2, 0.9, 0.5, 0.1};
  const auto out = transform(mask, Transform::TopK(1, false), g.edge_pair());
  EXPECT_EQ(out, (V{0.2, 0.9, 0, 0}));
  EXPECT_THROW(transform(mask, Transform::TopK(1, false)), std::invalid_argument);
}

TEST(Transform, UndirectedTopKBoundsPairCount) {
  Rng rng(1);
  const auto g = testing::random_graph(rng, 30, 80, 1, 2, true);
  V mask(g.num_edges());
  for (auto& v : mask) v = uniform01(rng);
  for (int k : {1, 5, 10, 20}) {
    const auto out = transform(mask, Transform::TopK(k, false), g.edge_pair());
    std::set<std::size_t> pairs;
    for (std::size_t e = 0; e < out.size(); ++e) {
      if (out[e] > 0) pairs.insert(g.edge_pair()[e]);
    }
    EXPECT_EQ(pairs.size(), std::min<std::size_t>(k, g.num_pairs()));
  }
}

TEST(Transform, ParseAndValidate) {
  EXPECT_EQ(Transform::Parse("topk_undirected").ToString(), "topk_undirected");
  EXPECT_TRUE(Transform::Parse("topk_directed").directed);
  EXPECT_EQ(Transform::Parse("threshold=0.25").value, 0.25);
  EXPECT_EQ(Transform::Parse("sparsity=0.7").kind, Transform::Kind::kSparsity);
  EXPECT_EQ(Transform::Parse(Transform::Sparsity(0.7).ToString()).value, 0.7);
  EXPECT_THROW(Transform::Parse("sparsity=1.5"), std::invalid_argument);
  EXPECT_THROW(Transform::Parse("threshold=abc"), std::invalid_argument);
  EXPECT_THROW(Transform::Parse("median"), std::invalid_argument);
  EXPECT_THROW(transform(V{1}, Transform::TopK(0, true)), std::invalid_argument);
}

TEST(Harden, Examples) {
  EXPECT_EQ(harden(V{0.9, 0, 0.5}), (V{1, 0, 1}));
  EXPECT_EQ(harden(V{0, 0}), (V{0, 0}));
  const V m{0.3, 0, 1, 0.01};
  EXPECT_EQ(harden(harden(m)), harden(m));
}

TEST(Complement, Examples) {
  EXPECT_EQ(complement_mask(V{1, 0, 1}), (V{0, 1, 0}));
  EXPECT_DOUBLE_EQ(complement_mask(V{0.3})[0], 0.7);
  const V m{0.25, 0.5, 1, 0};
  EXPECT_EQ(complement_mask(complement_mask(m)), m);
}

TEST(ApplyMask, ScalesWeightsAndFeatures) {
  Rng rng(2);
  const auto g = testing::random_graph(rng, 8, 20, 3, 2, true, true);
  const V ones(g.num_edges(), 1.0);
  const auto identity = apply_mask(g, ones);
  EXPECT_TRUE(std::equal(identity.edge_weights.begin(), identity.edge_weights.end(),
                         g.edge_weights().begin()));
  EXPECT_EQ(identity.features, g.features());
  const auto empty = apply_mask(g, V(g.num_edges(), 0.0));
  for (double w : empty.edge_weights) EXPECT_EQ(w, 0.0);

  V m(g.num_edges());
  for (auto& v : m) v = uniform01(rng);
  FeatureMask per_node{Matrix(8, 3)};
  for (Eigen::Index i = 0; i < per_node.values.size(); ++i) per_node.values.data()[i] = uniform01(rng);
  const auto masked = apply_mask(g, m, &per_node);
  for (std::size_t e = 0; e < m.size(); ++e) {
    EXPECT_EQ(masked.edge_weights[e], m[e] * g.edge_weights()[e]);
  }
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_EQ(masked.features(i, j), per_node.values(i, j) * g.features()(i, j));
    }
  }
  FeatureMask broadcast{Matrix{{0.0, 0.5, 1.0}}};
  const auto b = apply_mask(g, ones, &broadcast);
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(b.features(i, 0), 0.0);
    EXPECT_EQ(b.features(i, 1), 0.5 * g.features()(i, 1));
    EXPECT_EQ(b.features(i, 2), g.features()(i, 2));
  }
  EXPECT_THROW(apply_mask(g, V(g.num_edges() + 1, 1.0)), std::invalid_argument);
  V bad = ones;
  bad[0] = 1.5;
  EXPECT_THROW(apply_mask(g, bad), std::invalid_argument);
  FeatureMask wrong{Matrix::Ones(2, 3)};
  EXPECT_THROW(apply_mask(g, ones, &wrong), std::invalid_argument);
}

TEST(ExplanationJson, RoundTrip) {
  Rng rng(3);
  const auto g = testing::random_graph(rng, 20, 40, 2, 2, true);
  const auto cg = k_hop_subgraph(g, 4, 2);
  Explanation e;
  e.explainer = "pagerank";
  e.target = 4;
  e.target_label = 1;
  e.edge_mask.resize(cg.subgraph.num_edges());
  for (auto& v : e.edge_mask) v = uniform01(rng);
  e.feature_mask = FeatureMask{Matrix{{0.25, 1.0}}};
  e.time_ms = 1.5;
  const auto j = explanation_to_json(e, cg);
  const auto back = explanation_from_json(j, cg);
  EXPECT_EQ(back.edge_mask, e.edge_mask);
  EXPECT_EQ(back.feature_mask->values, e.feature_mask->values);
  EXPECT_EQ(back.explainer, "pagerank");
  EXPECT_EQ(back.target_label, 1);
  auto broken = j;
  broken["target"] = 5;
  EXPECT_THROW(explanation_from_json(broken, cg), std::invalid_argument);
}

}  // namespace
}  // namespace gnnx
