#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "csv.hpp"
#include "gnnx/bench.hpp"
#include "gnnx/random.hpp"

namespace gnnx {

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                         std::string_view what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw std::invalid_argument("unknown " + std::string(what) + " key '" + key + "'");
    }
  }
}

}  // namespace

ModelShape TrainRecipe::ShapeFor(const Graph& g) const {
  return {g.feature_dim(), hidden_dim, num_layers, g.num_classes(), dropout, concat_readout};
}

TrainRecipe TrainRecipe::FromJson(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"hidden_dim", "num_layers", "dropout", "concat_readout", "epochs",
                       "learning_rate", "weight_decay", "seed"},
                      "recipe");
  TrainRecipe r;
  r.hidden_dim = j.value("hidden_dim", r.hidden_dim);
  r.num_layers = j.value("num_layers", r.num_layers);
  r.dropout = j.value("dropout", r.dropout);
  r.concat_readout = j.value("concat_readout", r.concat_readout);
  r.train.epochs = j.value("epochs", r.train.epochs);
  r.train.learning_rate = j.value("learning_rate", r.train.learning_rate);
  r.train.weight_decay = j.value("weight_decay", r.train.weight_decay);
  r.train.seed = j.value("seed", r.train.seed);
  if (r.hidden_dim < 1 || r.num_layers < 1) {
    throw std::invalid_argument("recipe needs hidden_dim >= 1 and num_layers >= 1");
  }
  if (!(r.dropout >= 0.0 && r.dropout < 1.0)) {
    throw std::invalid_argument("recipe dropout must lie in [0,1)");
  }
  r.train.Validate();
  return r;
}

nlohmann::json TrainRecipe::ToJson() const {
  return {{"hidden_dim", hidden_dim},
          {"num_layers", num_layers},
          {"dropout", dropout},
          {"concat_readout", concat_readout},
          {"epochs", train.epochs},
          {"learning_rate", train.learning_rate},
          {"weight_decay", train.weight_decay},
          {"seed", train.seed}};
}

std::string NodeSelection::ToString() const {
  switch (policy) {
    case NodePolicy::kTestSplit:
      return "test_split";
    case NodePolicy::kMotifOnly:
      return "motif_only";
    case NodePolicy::kLabelFilter:
      return "label_filter=" + std::to_string(label);
    case NodePolicy::kCorrectOnly:
      return "correct_only";
    case NodePolicy::kWrongOnly:
      return "wrong_only";
  }
  return {};
}

NodeSelection NodeSelection::Parse(std::string_view text) {
  if (text == "test_split") return {NodePolicy::kTestSplit, 0};
  if (text == "motif_only") return {NodePolicy::kMotifOnly, 0};
  if (text == "correct_only") return {NodePolicy::kCorrectOnly, 0};
  if (text == "wrong_only") return {NodePolicy::kWrongOnly, 0};
  constexpr std::string_view kLabel = "label_filter=";
  if (text.starts_with(kLabel)) {
    try {
      return {NodePolicy::kLabelFilter, csv::parse_number<int>(text.substr(kLabel.size()), "label")};
    } catch (const std::runtime_error& e) {
      throw std::invalid_argument(e.what());
    }
  }
  throw std::invalid_argument("unknown node policy '" + std::string(text) + "'");
}

std::vector<NodeId> select_nodes(const Graph& g, std::span<const int> predictions,
                                 const GroundTruth* truth, const NodeSelection& selection,
                                 int n, std::uint64_t seed, std::string* warning) {
  if (n < 1) throw std::invalid_argument("number of nodes must be at least 1");
  if (predictions.size() != static_cast<std::size_t>(g.num_nodes())) {
    throw std::invalid_argument("need one prediction per node");
  }
  std::vector<NodeId> pool;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.splits()[v] != Split::kTest) continue;
    const int y = g.labels()[v];
    bool keep = true;
    switch (selection.policy) {
      case NodePolicy::kTestSplit:
        break;
      case NodePolicy::kMotifOnly:
        keep = truth ? truth->motif_of.at(v) >= 0 : y != 0;
        break;
      case NodePolicy::kLabelFilter:
        keep = y == selection.label;
        break;
      case NodePolicy::kCorrectOnly:
        keep = predictions[v] == y;
        break;
      case NodePolicy::kWrongOnly:
        keep = predictions[v] != y;
        break;
    }
    if (keep) pool.push_back(v);
  }
  if (pool.empty()) {
    throw std::invalid_argument("no test node satisfies node policy " + selection.ToString());
  }
  const auto want = static_cast<std::size_t>(n);
  if (pool.size() < want && warning) {
    *warning = "node policy " + selection.ToString() + " leaves " + std::to_string(pool.size()) +
               " candidates, fewer than the " + std::to_string(n) + " requested";
  }
  const std::size_t take = std::min(want, pool.size());
  Rng rng(derive_seed({seed, 0x6e6f646573}));
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
  return pool;
}

ExperimentConfig::ExperimentConfig() {
  for (const auto& name : explainer_names()) explainers.push_back({name});
}

std::vector<int> ExperimentConfig::EffectiveK() const {
  if (strategy.kind == Transform::Kind::kTopK) return k_sweep;
  return {0};
}

void ExperimentConfig::Validate() const {
  if (dataset.empty()) throw std::invalid_argument("config needs a dataset");
  if (dataset.find_first_of(",\"\n") != std::string::npos) {
    throw std::invalid_argument("dataset name may not contain commas, quotes or newlines");
  }
  if (explainers.empty()) throw std::invalid_argument("config needs at least one explainer");
  std::set<std::string> names;
  for (const auto& spec : explainers) {
    make_explainer(spec);
    if (!names.insert(spec.name).second) {
      throw std::invalid_argument("explainer '" + spec.name + "' listed twice");
    }
  }
  if (focus.empty() || std::set<Focus>(focus.begin(), focus.end()).size() != focus.size()) {
    throw std::invalid_argument("focus list must be non-empty without repeats");
  }
  if (mask_nature.empty() ||
      std::set<MaskNature>(mask_nature.begin(), mask_nature.end()).size() != mask_nature.size()) {
    throw std::invalid_argument("mask_nature list must be non-empty without repeats");
  }
  strategy.Validate();
  if (strategy.kind == Transform::Kind::kTopK) {
    if (k_sweep.empty()) throw std::invalid_argument("k_sweep must not be empty");
    for (int k : k_sweep) {
      if (k < 1) throw std::invalid_argument("k_sweep values must be >= 1");
    }
    if (std::set<int>(k_sweep.begin(), k_sweep.end()).size() != k_sweep.size()) {
      throw std::invalid_argument("k_sweep has repeated values");
    }
  }
  if (num_nodes < 1) throw std::invalid_argument("num_nodes must be at least 1");
  if (seeds.empty()) throw std::invalid_argument("config needs at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw std::invalid_argument("seeds has repeated values");
  }
  if (!(w_plus >= 0.0 && w_plus <= 1.0 && w_minus >= 0.0 && w_minus <= 1.0) ||
      std::abs(w_plus + w_minus - 1.0) > 1e-9) {
    throw std::invalid_argument("weights must lie in [0,1] and sum to 1");
  }
  if (workers < 0) throw std::invalid_argument("workers must be >= 0");
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"dataset", "dataset_seed", "model", "recipe", "explainers", "focus",
                       "mask_nature", "strategy", "k_sweep", "num_nodes", "node_policy", "seeds",
                       "weights", "typology", "workers"},
                      "config");
  ExperimentConfig c;
  try {
    c.dataset = j.value("dataset", c.dataset);
    c.dataset_seed = j.value("dataset_seed", c.dataset_seed);
    c.model = j.value("model", c.model);
    if (j.contains("recipe")) c.recipe = TrainRecipe::FromJson(j.at("recipe"));
    if (j.contains("explainers")) {
      c.explainers.clear();
      for (const auto& e : j.at("explainers")) c.explainers.push_back(ExplainerSpec::FromJson(e));
    }
    if (j.contains("focus")) {
      c.focus.clear();
      for (const auto& f : j.at("focus")) c.focus.push_back(parse_focus(f.get<std::string>()));
    }
    if (j.contains("mask_nature")) {
      c.mask_nature.clear();
      for (const auto& m : j.at("mask_nature")) {
        c.mask_nature.push_back(parse_mask_nature(m.get<std::string>()));
      }
    }
    if (j.contains("strategy")) c.strategy = Transform::Parse(j.at("strategy").get<std::string>());
    c.k_sweep = j.value("k_sweep", c.k_sweep);
    c.num_nodes = j.value("num_nodes", c.num_nodes);
    if (j.contains("node_policy")) {
      c.node_policy = NodeSelection::Parse(j.at("node_policy").get<std::string>());
    }
    c.seeds = j.value("seeds", c.seeds);
    if (j.contains("weights")) {
      const auto w = j.at("weights").get<std::vector<double>>();
      if (w.size() != 2) throw std::invalid_argument("weights must be [w_plus, w_minus]");
      c.w_plus = w[0];
      c.w_minus = w[1];
    }
    if (j.contains("typology")) {
      const auto& t = j.at("typology");
      reject_unknown_keys(t, {"sufficient_max_fid_minus", "necessary_min_fid_plus"}, "typology");
      c.typology.sufficient_max_fid_minus =
          t.value("sufficient_max_fid_minus", c.typology.sufficient_max_fid_minus);
      c.typology.necessary_min_fid_plus =
          t.value("necessary_min_fid_plus", c.typology.necessary_min_fid_plus);
    }
    c.workers = j.value("workers", c.workers);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed config: ") + e.what());
  }
  c.Validate();
  return c;
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json specs = nlohmann::json::array();
  for (const auto& e : explainers) specs.push_back(e.ToJson());
  std::vector<std::string> focus_names, nature_names;
  for (Focus f : focus) focus_names.emplace_back(to_string(f));
  for (MaskNature m : mask_nature) nature_names.emplace_back(to_string(m));
  return {{"dataset", dataset},
          {"dataset_seed", dataset_seed},
          {"model", model},
          {"recipe", recipe.ToJson()},
          {"explainers", specs},
          {"focus", focus_names},
          {"mask_nature", nature_names},
          {"strategy", strategy.ToString()},
          {"k_sweep", k_sweep},
          {"num_nodes", num_nodes},
          {"node_policy", node_policy.ToString()},
          {"seeds", seeds},
          {"weights", {w_plus, w_minus}},
          {"typology",
           {{"sufficient_max_fid_minus", typology.sufficient_max_fid_minus},
            {"necessary_min_fid_plus", typology.necessary_min_fid_plus}}},
          {"workers", workers}};
}

}  // namespace gnnx
