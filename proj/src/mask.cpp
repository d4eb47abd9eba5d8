#include "gnnx/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "csv.hpp"

namespace gnnx {

std::string_view to_string(Focus focus) {
  return focus == Focus::kPhenomenon ? "phenomenon" : "model";
}

std::string_view to_string(MaskNature nature) {
  return nature == MaskNature::kHard ? "hard" : "soft";
}

Focus parse_focus(std::string_view text) {
  if (text == "phenomenon") return Focus::kPhenomenon;
  if (text == "model") return Focus::kModel;
  throw std::invalid_argument("unknown focus '" + std::string(text) + "'");
}

MaskNature parse_mask_nature(std::string_view text) {
  if (text == "hard") return MaskNature::kHard;
  if (text == "soft") return MaskNature::kSoft;
  throw std::invalid_argument("unknown mask nature '" + std::string(text) + "'");
}

std::vector<double> normalize(std::span<const double> raw) {
  std::vector<double> out(raw.begin(), raw.end());
  if (out.empty()) return out;
  for (double v : out) {
    if (!std::isfinite(v)) throw std::invalid_argument("cannot normalize non-finite mask value");
  }
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double min = *lo;
  const double range = *hi - min;
  if (range == 0.0) {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  for (double& v : out) v = std::clamp((v - min) / range, 0.0, 1.0);
  return out;
}

std::vector<double> node_to_edge(std::span<const double> node_scores, const Graph& g) {
  if (node_scores.size() != static_cast<std::size_t>(g.num_nodes())) {
    throw std::invalid_argument("node scores have length " + std::to_string(node_scores.size()) +
                                ", graph has " + std::to_string(g.num_nodes()) + " nodes");
  }
  std::vector<double> edge_scores(g.num_edges());
  for (EdgeIndex e = 0; e < g.num_edges(); ++e) {
    edge_scores[e] = 0.5 * (node_scores[g.edge(e).src] + node_scores[g.edge(e).dst]);
  }
  return normalize(edge_scores);
}

Transform Transform::TopK(int k, bool directed) {
  Transform t;
  t.kind = Kind::kTopK;
  t.k = k;
  t.directed = directed;
  t.Validate();
  return t;
}

Transform Transform::Threshold(double tau) {
  Transform t;
  t.kind = Kind::kThreshold;
  t.value = tau;
  t.Validate();
  return t;
}

Transform Transform::Sparsity(double x) {
  Transform t;
  t.kind = Kind::kSparsity;
  t.value = x;
  t.Validate();
  return t;
}

void Transform::Validate() const {
  switch (kind) {
    case Kind::kTopK:
      if (k <= 0) throw std::invalid_argument("topk needs k >= 1, got " + std::to_string(k));
      break;
    case Kind::kThreshold:
      if (!(value >= 0.0 && value <= 1.0)) {
        throw std::invalid_argument("threshold must lie in [0,1]");
      }
      break;
    case Kind::kSparsity:
      if (!(value >= 0.0 && value <= 1.0)) {
        throw std::invalid_argument("sparsity must lie in [0,1]");
      }
      break;
  }
}

std::string Transform::ToString() const {
  switch (kind) {
    case Kind::kTopK:
      return directed ? "topk_directed" : "topk_undirected";
    case Kind::kThreshold:
      return "threshold=" + csv::format_double(value);
    case Kind::kSparsity:
      return "sparsity=" + csv::format_double(value);
  }
  return {};
}

Transform Transform::Parse(std::string_view text) {
  if (text == "topk_undirected" || text == "topk") return TopK(10, false);
  if (text == "topk_directed") return TopK(10, true);
  const auto eq = text.find('=');
  if (eq != std::string_view::npos) {
    const auto name = text.substr(0, eq);
    const auto value = text.substr(eq + 1);
    try {
      if (name == "threshold") return Threshold(csv::parse_number<double>(value, "threshold"));
      if (name == "sparsity") return Sparsity(csv::parse_number<double>(value, "sparsity"));
    } catch (const std::runtime_error& e) {
      throw std::invalid_argument(e.what());
    }
  }
  throw std::invalid_argument("unknown mask transformation '" + std::string(text) + "'");
}

namespace {

// Indices of the `count` largest positive scores, ties to the lower index.
std::vector<std::size_t> largest(std::span<const double> scores, std::size_t count) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > 0.0) order.push_back(i);
  }
  count = std::min(count, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
                    });
  order.resize(count);
  return order;
}

std::vector<double> keep_only(std::span<const double> mask, std::span<const std::size_t> kept) {
  std::vector<double> out(mask.size(), 0.0);
  for (std::size_t i : kept) out[i] = mask[i];
  return out;
}

}  // namespace

std::vector<double> transform(std::span<const double> mask, const Transform& strategy,
                              std::span<const std::size_t> edge_pair) {
  strategy.Validate();
  switch (strategy.kind) {
    case Transform::Kind::kTopK: {
      if (strategy.directed) {
        return keep_only(mask, largest(mask, static_cast<std::size_t>(strategy.k)));
      }
      if (edge_pair.size() != mask.size()) {
        throw std::invalid_argument("undirected topk needs one pair id per mask entry");
      }
      std::size_t num_pairs = 0;
      for (std::size_t p : edge_pair) num_pairs = std::max(num_pairs, p + 1);
      std::vector<double> pair_score(num_pairs, 0.0);
      for (std::size_t e = 0; e < mask.size(); ++e) {
        pair_score[edge_pair[e]] = std::max(pair_score[edge_pair[e]], mask[e]);
      }
      std::vector<char> selected(num_pairs, 0);
      for (std::size_t p : largest(pair_score, static_cast<std::size_t>(strategy.k))) {
        selected[p] = 1;
      }
      std::vector<double> out(mask.size(), 0.0);
      for (std::size_t e = 0; e < mask.size(); ++e) {
        if (selected[edge_pair[e]]) out[e] = mask[e];
      }
      return out;
    }
    case Transform::Kind::kThreshold: {
      std::vector<double> out(mask.begin(), mask.end());
      for (double& v : out) {
        if (!(v > strategy.value)) v = 0.0;
      }
      return out;
    }
    case Transform::Kind::kSparsity: {
      const auto nonzero =
          static_cast<double>(std::count_if(mask.begin(), mask.end(), [](double v) { return v > 0.0; }));
      // The epsilon keeps (1 - 0.7) * 10 from rounding up to 4.
      const double keep = std::ceil((1.0 - strategy.value) * nonzero - 1e-9);
      return keep_only(mask, largest(mask, static_cast<std::size_t>(std::max(keep, 0.0))));
    }
  }
  return {};
}

std::vector<double> harden(std::span<const double> mask) {
  std::vector<double> out(mask.size());
  std::transform(mask.begin(), mask.end(), out.begin(), [](double v) { return v > 0.0 ? 1.0 : 0.0; });
  return out;
}

std::vector<double> complement_mask(std::span<const double> mask) {
  std::vector<double> out(mask.size());
  std::transform(mask.begin(), mask.end(), out.begin(), [](double v) { return 1.0 - v; });
  return out;
}

MaskedInput apply_mask(const Graph& g, std::span<const double> mask,
                       const FeatureMask* feature_mask) {
  if (mask.size() != g.num_edges()) {
    throw std::invalid_argument("edge mask has length " + std::to_string(mask.size()) +
                                ", graph has " + std::to_string(g.num_edges()) + " edges");
  }
  MaskedInput out;
  out.edge_weights.resize(mask.size());
  const auto base = g.edge_weights();
  for (std::size_t e = 0; e < mask.size(); ++e) {
    if (!(mask[e] >= 0.0 && mask[e] <= 1.0)) {
      throw std::invalid_argument("edge mask value outside [0,1] at edge " + std::to_string(e));
    }
    out.edge_weights[e] = mask[e] * base[e];
  }
  out.features = g.features();
  if (feature_mask == nullptr) return out;

  const Matrix& fm = feature_mask->values;
  if (fm.cols() != g.feature_dim() || (fm.rows() != 1 && fm.rows() != g.num_nodes())) {
    throw std::invalid_argument("feature mask shape does not match the graph's features");
  }
  if (fm.size() > 0 && !(fm.minCoeff() >= 0.0 && fm.maxCoeff() <= 1.0)) {
    throw std::invalid_argument("feature mask value outside [0,1]");
  }
  if (fm.rows() == 1) {
    out.features.array().rowwise() *= fm.row(0).array();
  } else {
    out.features = out.features.cwiseProduct(fm);
  }
  return out;
}

nlohmann::json explanation_to_json(const Explanation& explanation, const ComputationGraph& cg) {
  const Graph& g = cg.subgraph;
  if (explanation.edge_mask.size() != g.num_edges()) {
    throw std::invalid_argument("explanation mask is not aligned to the computation graph");
  }
  nlohmann::json edges = nlohmann::json::array();
  for (EdgeIndex e = 0; e < g.num_edges(); ++e) {
    edges.push_back({cg.node_map[g.edge(e).src], cg.node_map[g.edge(e).dst],
                     explanation.edge_mask[e]});
  }
  nlohmann::json j = {{"target", explanation.target},
                      {"explainer", explanation.explainer},
                      {"focus", to_string(explanation.focus)},
                      {"target_label", explanation.target_label},
                      {"edges", std::move(edges)},
                      {"time_ms", explanation.time_ms}};
  if (explanation.feature_mask) {
    const Matrix& fm = explanation.feature_mask->values;
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < fm.rows(); ++r) {
      rows.push_back(std::vector<double>(fm.row(r).begin(), fm.row(r).end()));
    }
    j["feature_mask"] = std::move(rows);
  }
  return j;
}

Explanation explanation_from_json(const nlohmann::json& j, const ComputationGraph& cg) {
  const Graph& g = cg.subgraph;
  Explanation out;
  out.target = j.at("target").get<NodeId>();
  out.explainer = j.at("explainer").get<std::string>();
  out.focus = parse_focus(j.at("focus").get<std::string>());
  out.target_label = j.value("target_label", 0);
  out.time_ms = j.value("time_ms", 0.0);
  if (out.target != cg.target) {
    throw std::invalid_argument("explanation target does not match the computation graph");
  }
  const auto& edges = j.at("edges");
  if (edges.size() != g.num_edges()) {
    throw std::invalid_argument("explanation has " + std::to_string(edges.size()) +
                                " edges, computation graph has " + std::to_string(g.num_edges()));
  }
  out.edge_mask.resize(edges.size());
  for (EdgeIndex e = 0; e < g.num_edges(); ++e) {
    const auto& entry = edges[e];
    if (entry.at(0).get<NodeId>() != cg.node_map[g.edge(e).src] ||
        entry.at(1).get<NodeId>() != cg.node_map[g.edge(e).dst]) {
      throw std::invalid_argument("explanation edge " + std::to_string(e) +
                                  " does not match the computation graph");
    }
    out.edge_mask[e] = entry.at(2).get<double>();
  }
  if (j.contains("feature_mask")) {
    const auto rows = j.at("feature_mask").get<std::vector<std::vector<double>>>();
    FeatureMask fm{Matrix(static_cast<Eigen::Index>(rows.size()),
                          rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()))};
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != static_cast<std::size_t>(fm.values.cols())) {
        throw std::invalid_argument("ragged feature mask");
      }
      for (std::size_t c = 0; c < rows[r].size(); ++c) fm.values(r, c) = rows[r][c];
    }
    out.feature_mask = std::move(fm);
  }
  return out;
}

}  // namespace gnnx
