#include "gnnx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace gnnx {

namespace {

double probability(const std::vector<double>& probs, int cls) {
  if (cls < 0 || static_cast<std::size_t>(cls) >= probs.size()) {
    throw std::invalid_argument("class " + std::to_string(cls) + " outside probability vector");
  }
  return probs[cls];
}

}  // namespace

double fidelity(std::span<const FidelityInput> inputs, FidelityKind kind, FidelityForm form,
                Focus focus) {
  if (inputs.empty()) throw std::invalid_argument("fidelity over an empty set of nodes");
  double total = 0.0;
  for (const auto& in : inputs) {
    const int reference = focus == Focus::kPhenomenon ? in.y : in.y_hat;
    const int sub_label = kind == FidelityKind::kPlus ? in.y_complement : in.y_masked;
    const auto& sub_probs = kind == FidelityKind::kPlus ? in.p_complement : in.p_masked;
    if (form == FidelityForm::kAcc) {
      const double full_hit = in.y_hat == reference ? 1.0 : 0.0;
      const double sub_hit = sub_label == reference ? 1.0 : 0.0;
      total += std::abs(full_hit - sub_hit);
    } else {
      const double drop = probability(in.p_full, reference) - probability(sub_probs, reference);
      total += focus == Focus::kPhenomenon ? drop : std::abs(drop);
    }
  }
  return total / static_cast<double>(inputs.size());
}

FidelityScores fidelity_scores(std::span<const FidelityInput> inputs, Focus focus) {
  return {fidelity(inputs, FidelityKind::kPlus, FidelityForm::kAcc, focus),
          fidelity(inputs, FidelityKind::kMinus, FidelityForm::kAcc, focus),
          fidelity(inputs, FidelityKind::kPlus, FidelityForm::kProb, focus),
          fidelity(inputs, FidelityKind::kMinus, FidelityForm::kProb, focus)};
}

double characterization(double fid_plus, double fid_minus, double w_plus, double w_minus) {
  if (!(w_plus >= 0.0 && w_plus <= 1.0 && w_minus >= 0.0 && w_minus <= 1.0)) {
    throw std::invalid_argument("characterization weights must lie in [0,1]");
  }
  if (std::abs(w_plus + w_minus - 1.0) > 1e-9) {
    throw std::invalid_argument("characterization weights must sum to 1");
  }
  if (!(fid_plus >= 0.0 && fid_plus <= 1.0 && fid_minus >= 0.0 && fid_minus <= 1.0)) {
    throw std::invalid_argument("characterization needs fidelities in [0,1]");
  }
  const double sufficiency = 1.0 - fid_minus;
  if (fid_plus == 0.0 || sufficiency == 0.0) return 0.0;
  return (w_plus + w_minus) / (w_plus / fid_plus + w_minus / sufficiency);
}

double fid_auc(std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("fid_auc needs at least two points");
  for (auto& [x, y] : points) {
    x = std::clamp(x, 0.0, 1.0);
    y = std::clamp(y, 0.0, 1.0);
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].first - points[i - 1].first) * (points[i].second + points[i - 1].second) / 2;
  }
  return area;
}

GroundTruthScore groundtruth_accuracy(std::span<const Edge> explanation,
                                      std::span<const Edge> truth) {
  auto undirected = [](std::span<const Edge> edges) {
    std::set<std::pair<NodeId, NodeId>> pairs;
    for (const auto& e : edges) pairs.emplace(std::min(e.src, e.dst), std::max(e.src, e.dst));
    return pairs;
  };
  const auto predicted = undirected(explanation);
  const auto expected = undirected(truth);
  if (expected.empty()) throw std::invalid_argument("ground truth explanation is empty");
  std::size_t overlap = 0;
  for (const auto& p : predicted) overlap += expected.count(p);
  GroundTruthScore score;
  score.precision =
      predicted.empty() ? 0.0 : static_cast<double>(overlap) / static_cast<double>(predicted.size());
  score.recall = static_cast<double>(overlap) / static_cast<double>(expected.size());
  if (score.precision + score.recall > 0.0) {
    score.f1 = 2 * score.precision * score.recall / (score.precision + score.recall);
  }
  return score;
}

MaskProperties mask_properties(std::span<const double> mask, const Graph& g) {
  if (mask.size() != g.num_edges()) {
    throw std::invalid_argument("mask is not aligned to the graph's edges");
  }
  MaskProperties props;
  double total = 0.0;
  std::vector<Edge> support;
  std::set<std::size_t> pairs;
  for (EdgeIndex e = 0; e < mask.size(); ++e) {
    if (!(mask[e] > 0.0)) continue;
    ++props.size;
    total += mask[e];
    props.max_value = std::max(props.max_value, mask[e]);
    support.push_back(g.edge(e));
    pairs.insert(g.edge_pair()[e]);
  }
  if (props.size == 0) return props;
  for (double v : mask) {
    if (!(v > 0.0)) continue;
    const double p = v / total;
    props.entropy -= p * std::log(p);
  }
  props.entropy = std::max(props.entropy, 0.0);
  props.cc_ratio =
      static_cast<double>(connected_components(support)) / static_cast<double>(pairs.size());
  return props;
}

std::vector<std::string> typology(double fid_plus, double fid_minus,
                                  const TypologyThresholds& thresholds) {
  std::vector<std::string> tags;
  if (fid_plus >= thresholds.necessary_min_fid_plus) tags.emplace_back("necessary");
  if (fid_minus <= thresholds.sufficient_max_fid_minus) tags.emplace_back("sufficient");
  return tags;
}

}  // namespace gnnx
