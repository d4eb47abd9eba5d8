#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "gnnx/metrics.hpp"
#include "gnnx/random.hpp"
#include "test_util.hpp"

namespace gnnx {
namespace {

FidelityInput node(int y, int y_hat, int y_masked, int y_complement, std::vector<double> p_full,
                   std::vector<double> p_masked, std::vector<double> p_complement) {
  return {y, y_hat, y_masked, y_complement, std::move(p_full), std::move(p_masked),
          std::move(p_complement)};
}

TEST(Fidelity, IdentityMaskAndEmptyComplementAreZero) {
  const std::vector<FidelityInput> in{node(0, 1, 1, 1, {0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}),
                                      node(1, 1, 1, 1, {0.2, 0.8}, {0.2, 0.8}, {0.2, 0.8})};
  for (Focus focus : {Focus::kModel, Focus::kPhenomenon}) {
    const auto s = fidelity_scores(in, focus);
    EXPECT_EQ(s.plus_acc, 0.0);
    EXPECT_EQ(s.minus_acc, 0.0);
    EXPECT_EQ(s.plus_prob, 0.0);
    EXPECT_EQ(s.minus_prob, 0.0);
  }
}

TEST(Fidelity, HandComputedTwoNodes) {
  // Node a: correct, explanation keeps the class, complement flips it.
  // Node b: wrong prediction, explanation lands on the true class.
  const std::vector<FidelityInput> in{node(0, 0, 0, 1, {0.9, 0.1}, {0.8, 0.2}, {0.4, 0.6}),
                                      node(1, 0, 1, 0, {0.6, 0.4}, {0.3, 0.7}, {0.7, 0.3})};
  const auto phen = fidelity_scores(in, Focus::kPhenomenon);
  EXPECT_DOUBLE_EQ(phen.plus_acc, 0.5);
  EXPECT_DOUBLE_EQ(phen.minus_acc, 0.5);
  EXPECT_DOUBLE_EQ(phen.plus_prob, ((0.9 - 0.4) + (0.4 - 0.3)) / 2);
  EXPECT_DOUBLE_EQ(phen.minus_prob, ((0.9 - 0.8) + (0.4 - 0.7)) / 2);
  const auto model = fidelity_scores(in, Focus::kModel);
  EXPECT_DOUBLE_EQ(model.plus_acc, 0.5);
  EXPECT_DOUBLE_EQ(model.minus_acc, 0.5);
  EXPECT_DOUBLE_EQ(model.plus_prob, ((0.9 - 0.4) + std::abs(0.6 - 0.7)) / 2);
  EXPECT_DOUBLE_EQ(model.minus_prob, ((0.9 - 0.8) + std::abs(0.6 - 0.3)) / 2);
  EXPECT_THROW(fidelity({}, FidelityKind::kPlus, FidelityForm::kAcc, Focus::kModel),
               std::invalid_argument);
}

TEST(Fidelity, AccuracyFormsStayInUnitInterval) {
  Rng rng(1);
  std::vector<FidelityInput> in;
  for (int i = 0; i < 50; ++i) {
    auto label = [&] { return static_cast<int>(uniform_index(rng, 3)); };
    in.push_back(node(label(), label(), label(), label(), {0.2, 0.3, 0.5}, {0.1, 0.1, 0.8},
                      {0.6, 0.2, 0.2}));
  }
  for (Focus focus : {Focus::kModel, Focus::kPhenomenon}) {
    const auto s = fidelity_scores(in, focus);
    for (double v : {s.plus_acc, s.minus_acc}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(s.plus_prob, focus == Focus::kModel ? 0.0 : -1.0);
  }
}

TEST(Characterization, Examples) {
  EXPECT_NEAR(characterization(0.8, 0.6, 0.5, 0.5), 0.5333333333333333, 1e-9);
  EXPECT_DOUBLE_EQ(characterization(1.0, 0.0, 0.5, 0.5), 1.0);
  EXPECT_EQ(characterization(0.0, 0.2, 0.5, 0.5), 0.0);
  EXPECT_EQ(characterization(0.7, 1.0, 0.5, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(characterization(0.8, 0.6, 1.0, 0.0), 0.8);
  EXPECT_DOUBLE_EQ(characterization(0.8, 0.6, 0.0, 1.0), 0.4);
  EXPECT_THROW(characterization(0.5, 0.5, 0.7, 0.7), std::invalid_argument);
  EXPECT_THROW(characterization(1.2, 0.5, 0.5, 0.5), std::invalid_argument);
  EXPECT_THROW(characterization(0.5, -0.1, 0.5, 0.5), std::invalid_argument);
}

TEST(Characterization, BoundedByItsInputs) {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const double fp = uniform01(rng), fm = uniform01(rng), w = uniform01(rng);
    const double c = characterization(fp, fm, w, 1.0 - w);
    EXPECT_GE(c, std::min(fp, 1.0 - fm) - 1e-12);
    EXPECT_LE(c, std::max(fp, 1.0 - fm) + 1e-12);
  }
}

TEST(FidAuc, Examples) {
  EXPECT_DOUBLE_EQ(fid_auc({{0.0, 0.0}, {1.0, 1.0}}), 0.5);
  EXPECT_DOUBLE_EQ(fid_auc({{1.0, 1.0}, {0.0, 1.0}}), 1.0);
  EXPECT_DOUBLE_EQ(fid_auc({{0.0, 1.0}, {0.5, 1.0}, {0.5, 0.0}, {1.0, 0.0}}), 0.5);
  EXPECT_DOUBLE_EQ(fid_auc({{-0.5, 0.5}, {1.5, 0.5}}), 0.5);
  EXPECT_THROW(fid_auc({{0.5, 0.5}}), std::invalid_argument);
}

TEST(GroundTruth, F1Examples) {
  // Four predicted connections, six true, three shared.
  const std::vector<Edge> predicted{{0, 1}, {2, 1}, {2, 3}, {8, 9}};
  const std::vector<Edge> truth{{0, 1}, {1, 2}, {3, 2}, {3, 4}, {4, 5}, {5, 0}};
  const auto s = groundtruth_accuracy(predicted, truth);
  EXPECT_DOUBLE_EQ(s.precision, 0.75);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_DOUBLE_EQ(s.f1, 0.6);
  EXPECT_DOUBLE_EQ(groundtruth_accuracy(truth, truth).f1, 1.0);
  EXPECT_EQ(groundtruth_accuracy(std::vector<Edge>{{7, 8}}, truth).f1, 0.0);
  EXPECT_EQ(groundtruth_accuracy({}, truth).f1, 0.0);
  const std::vector<Edge> both_ways{{0, 1}, {1, 0}};
  EXPECT_DOUBLE_EQ(groundtruth_accuracy(both_ways, truth).precision, 1.0);
  EXPECT_THROW(groundtruth_accuracy(predicted, {}), std::invalid_argument);
}

Graph directed_path(int edges) {
  std::vector<Edge> list;
  for (int i = 0; i < edges; ++i) list.push_back({i, i + 1});
  return Graph::Build(list, Matrix::Ones(edges + 1, 1), std::vector<int>(edges + 1, 0),
                      std::vector<Split>(edges + 1, Split::kTest), false);
}

TEST(MaskProperties, UniformTenEdges) {
  const auto g = directed_path(10);
  const auto p = mask_properties(std::vector<double>(10, 0.4), g);
  EXPECT_EQ(p.size, 10u);
  EXPECT_NEAR(p.entropy, std::log(10.0), 1e-9);
  EXPECT_DOUBLE_EQ(p.max_value, 0.4);
  EXPECT_DOUBLE_EQ(p.cc_ratio, 0.1);
}

TEST(MaskProperties, SingleEdgeAndEmpty) {
  const auto g = directed_path(3);
  const auto one = mask_properties(std::vector<double>{0, 0.7, 0}, g);
  EXPECT_EQ(one.size, 1u);
  EXPECT_EQ(one.entropy, 0.0);
  EXPECT_EQ(one.cc_ratio, 1.0);
  const auto none = mask_properties(std::vector<double>(3, 0.0), g);
  EXPECT_EQ(none.size, 0u);
  EXPECT_EQ(none.cc_ratio, 0.0);
  EXPECT_THROW(mask_properties(std::vector<double>(2, 1.0), g), std::invalid_argument);
}

TEST(MaskProperties, UndirectedConnectionsCountOnce) {
  // Two separate undirected edges: two components over two connections.
  const auto g = Graph::Build({{0, 1}, {2, 3}}, Matrix::Ones(4, 1), {0, 0, 0, 0},
                              std::vector<Split>(4, Split::kTest), true);
  const auto p = mask_properties(std::vector<double>(4, 1.0), g);
  EXPECT_EQ(p.size, 4u);
  EXPECT_DOUBLE_EQ(p.cc_ratio, 1.0);
}

TEST(MaskProperties, EntropyBounds) {
  Rng rng(3);
  const auto g = testing::random_graph(rng, 20, 50, 1, 2, false);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> m(g.num_edges());
    for (auto& v : m) v = uniform01(rng) < 0.3 ? 0.0 : uniform01(rng);
    const auto p = mask_properties(m, g);
    EXPECT_GE(p.entropy, 0.0);
    if (p.size > 0) {
      EXPECT_LE(p.entropy, std::log(static_cast<double>(p.size)) + 1e-12);
      EXPECT_GT(p.cc_ratio, 0.0);
      EXPECT_LE(p.cc_ratio, 1.0);
    }
  }
}

TEST(Typology, Thresholds) {
  using Tags = std::vector<std::string>;
  EXPECT_EQ(typology(0.6, 0.1), (Tags{"necessary", "sufficient"}));
  EXPECT_EQ(typology(0.59, 0.11), Tags{});
  EXPECT_EQ(typology(0.9, 0.5), Tags{"necessary"});
  EXPECT_EQ(typology(0.1, 0.0), Tags{"sufficient"});
  EXPECT_EQ(typology(0.5, 0.2, {0.3, 0.4}), (Tags{"necessary", "sufficient"}));
}

}  // namespace
}  // namespace gnnx
