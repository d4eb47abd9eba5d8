#include "gnnx/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "gnnx/bundle.hpp"
#include "gnnx/random.hpp"

namespace gnnx {

std::string_view to_string(MotifKind kind) {
  switch (kind) {
    case MotifKind::kHouse:
      return "house";
    case MotifKind::kGrid:
      return "grid";
    case MotifKind::kCycle:
      return "cycle";
    case MotifKind::kBottle:
      return "bottle";
  }
  return "house";
}

MotifKind parse_motif(std::string_view text) {
  if (text == "house") return MotifKind::kHouse;
  if (text == "grid") return MotifKind::kGrid;
  if (text == "cycle") return MotifKind::kCycle;
  if (text == "bottle") return MotifKind::kBottle;
  throw std::invalid_argument("unknown motif '" + std::string(text) + "'");
}

void SyntheticSpec::Validate() const {
  if (motif_count < 1) throw std::invalid_argument("motif_count must be at least 1");
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be at least 1");
  if (!(noise_edge_fraction >= 0.0)) {
    throw std::invalid_argument("noise_edge_fraction must be non-negative");
  }
  if (!(train_fraction >= 0.0 && val_fraction >= 0.0 &&
        train_fraction + val_fraction <= 1.0)) {
    throw std::invalid_argument("split fractions must be non-negative and sum to <= 1");
  }
  if (base.kind == BaseKind::kBarabasiAlbert) {
    if (base.attachments < 1) throw std::invalid_argument("attachments must be >= 1");
    if (base.num_nodes <= base.attachments) {
      throw std::invalid_argument("Barabasi-Albert base needs more nodes than attachments");
    }
  } else if (base.height < 0 || base.height > 24) {
    throw std::invalid_argument("tree height must be in [0, 24]");
  }
}

SyntheticSpec named_spec(std::string_view name, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.name = std::string(name);
  spec.seed = seed;
  if (name == "ba_house") {
    spec.motif = MotifKind::kHouse;
  } else if (name == "ba_grid") {
    spec.motif = MotifKind::kGrid;
  } else if (name == "ba_bottle") {
    spec.motif = MotifKind::kBottle;
  } else if (name == "tree_cycle") {
    spec.base = {BaseKind::kBinaryTree, 0, 0, 8};
    spec.motif = MotifKind::kCycle;
    spec.motif_count = 60;
  } else if (name == "tree_grid") {
    spec.base = {BaseKind::kBinaryTree, 0, 0, 8};
    spec.motif = MotifKind::kGrid;
  } else {
    throw std::invalid_argument("unknown synthetic dataset '" + std::string(name) + "'");
  }
  return spec;
}

std::vector<std::string> named_spec_names() {
  return {"ba_house", "ba_grid", "tree_cycle", "tree_grid", "ba_bottle"};
}

nlohmann::json spec_to_json(const SyntheticSpec& spec) {
  nlohmann::json base;
  if (spec.base.kind == BaseKind::kBarabasiAlbert) {
    base = {{"type", "barabasi_albert"},
            {"num_nodes", spec.base.num_nodes},
            {"attachments", spec.base.attachments}};
  } else {
    base = {{"type", "binary_tree"}, {"height", spec.base.height}};
  }
  return {{"name", spec.name},
          {"base", base},
          {"motif", std::string(to_string(spec.motif))},
          {"motif_count", spec.motif_count},
          {"noise_edge_fraction", spec.noise_edge_fraction},
          {"feature_dim", spec.feature_dim},
          {"train_fraction", spec.train_fraction},
          {"val_fraction", spec.val_fraction},
          {"seed", spec.seed}};
}

SyntheticSpec spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  if (j.contains("name") && !j.contains("base") && !j.contains("motif")) {
    return named_spec(j.at("name").get<std::string>(), j.value("seed", std::uint64_t{0}));
  }
  spec.name = j.value("name", std::string("custom"));
  const auto& base = j.at("base");
  const auto type = base.at("type").get<std::string>();
  if (type == "barabasi_albert") {
    spec.base.kind = BaseKind::kBarabasiAlbert;
    spec.base.num_nodes = base.at("num_nodes").get<int>();
    spec.base.attachments = base.value("attachments", 5);
  } else if (type == "binary_tree") {
    spec.base.kind = BaseKind::kBinaryTree;
    spec.base.height = base.at("height").get<int>();
  } else {
    throw std::invalid_argument("unknown base graph type '" + type + "'");
  }
  spec.motif = parse_motif(j.at("motif").get<std::string>());
  spec.motif_count = j.at("motif_count").get<int>();
  spec.noise_edge_fraction = j.value("noise_edge_fraction", 0.0);
  spec.feature_dim = j.value("feature_dim", 10);
  spec.train_fraction = j.value("train_fraction", 0.8);
  spec.val_fraction = j.value("val_fraction", 0.1);
  spec.seed = j.value("seed", std::uint64_t{0});
  return spec;
}

int motif_size(MotifKind kind) {
  switch (kind) {
    case MotifKind::kHouse:
    case MotifKind::kBottle:
      return 5;
    case MotifKind::kCycle:
      return 6;
    case MotifKind::kGrid:
      return 9;
  }
  return 0;
}

std::vector<Edge> motif_edges(MotifKind kind) {
  switch (kind) {
    case MotifKind::kHouse:
      // Square 0-1-2-3 with the roof apex 4 over the 0-1 side.
      return {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 0}, {4, 1}};
    case MotifKind::kBottle:
      // Square 0-1-2-3 with a single neck node on corner 0.
      return {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 0}};
    case MotifKind::kCycle:
      return {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}};
    case MotifKind::kGrid: {
      std::vector<Edge> edges;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          const int v = 3 * r + c;
          if (c < 2) edges.push_back({v, v + 1});
          if (r < 2) edges.push_back({v, v + 3});
        }
      }
      return edges;
    }
  }
  return {};
}

int label_rule(MotifKind kind, int position) {
  if (position < 0 || position >= motif_size(kind)) {
    throw std::out_of_range("position " + std::to_string(position) +
                            " outside " + std::string(to_string(kind)) + " motif");
  }
  switch (kind) {
    case MotifKind::kHouse:
    case MotifKind::kBottle: {
      // Upper corners, lower corners, apex.
      static constexpr int kRoles[] = {1, 1, 2, 2, 3};
      return kRoles[position];
    }
    case MotifKind::kGrid:
    case MotifKind::kCycle:
      return 1;
  }
  return 0;
}

int num_classes(MotifKind kind) {
  return (kind == MotifKind::kHouse || kind == MotifKind::kBottle) ? 4 : 2;
}

nlohmann::json GroundTruth::ToJson() const {
  nlohmann::json motif = nlohmann::json::array();
  for (int m : motif_of) {
    if (m < 0) {
      motif.push_back(nullptr);
    } else {
      motif.push_back(m);
    }
  }
  return {{"motif_of", motif}, {"members", members}};
}

GroundTruth GroundTruth::FromJson(const nlohmann::json& j) {
  GroundTruth truth;
  for (const auto& m : j.at("motif_of")) {
    truth.motif_of.push_back(m.is_null() ? -1 : m.get<int>());
  }
  truth.members = j.at("members").get<std::vector<std::vector<NodeId>>>();
  return truth;
}

namespace {

// Preferential attachment: each new node links to `m` distinct existing
// nodes drawn proportionally to degree. The first new node links to the `m`
// seed nodes.
std::vector<Edge> barabasi_albert(int n, int m, Rng& rng) {
  std::vector<Edge> edges;
  std::vector<NodeId> repeated;
  std::vector<NodeId> targets(m);
  std::iota(targets.begin(), targets.end(), 0);
  for (NodeId source = m; source < n; ++source) {
    for (NodeId t : targets) edges.push_back({std::min(source, t), std::max(source, t)});
    repeated.insert(repeated.end(), targets.begin(), targets.end());
    repeated.insert(repeated.end(), m, source);
    std::set<NodeId> chosen;
    while (static_cast<int>(chosen.size()) < m) {
      chosen.insert(repeated[uniform_index(rng, repeated.size())]);
    }
    targets.assign(chosen.begin(), chosen.end());
  }
  return edges;
}

std::vector<Edge> binary_tree(int height, int* num_nodes) {
  *num_nodes = (1 << (height + 1)) - 1;
  std::vector<Edge> edges;
  for (NodeId v = 1; v < *num_nodes; ++v) edges.push_back({(v - 1) / 2, v});
  return edges;
}

}  // namespace

SyntheticDataset generate(const SyntheticSpec& spec) {
  spec.Validate();
  Rng rng(spec.seed);

  int base_nodes = 0;
  std::vector<Edge> edges;
  if (spec.base.kind == BaseKind::kBarabasiAlbert) {
    base_nodes = spec.base.num_nodes;
    edges = barabasi_albert(base_nodes, spec.base.attachments, rng);
  } else {
    edges = binary_tree(spec.base.height, &base_nodes);
  }

  // Attachment points: distinct base nodes while there are enough of them.
  std::vector<NodeId> anchors(base_nodes);
  std::iota(anchors.begin(), anchors.end(), 0);
  std::vector<NodeId> plugins;
  if (spec.motif_count <= base_nodes) {
    for (int i = 0; i < spec.motif_count; ++i) {
      const auto j = i + uniform_index(rng, base_nodes - i);
      std::swap(anchors[i], anchors[j]);
      plugins.push_back(anchors[i]);
    }
  } else {
    for (int i = 0; i < spec.motif_count; ++i) {
      plugins.push_back(static_cast<NodeId>(uniform_index(rng, base_nodes)));
    }
  }

  const int size = motif_size(spec.motif);
  const auto shape = motif_edges(spec.motif);
  const int total = base_nodes + spec.motif_count * size;
  std::vector<int> labels(total, 0);
  GroundTruth truth;
  truth.motif_of.assign(total, -1);
  for (int m = 0; m < spec.motif_count; ++m) {
    const NodeId start = base_nodes + m * size;
    std::vector<NodeId> members;
    for (int p = 0; p < size; ++p) {
      labels[start + p] = label_rule(spec.motif, p);
      truth.motif_of[start + p] = m;
      members.push_back(start + p);
    }
    truth.members.push_back(std::move(members));
    for (const Edge& e : shape) edges.push_back({start + e.src, start + e.dst});
    edges.push_back({plugins[m], start});
  }

  const auto noise = static_cast<std::size_t>(
      std::floor(spec.noise_edge_fraction * static_cast<double>(total)));
  if (noise > 0) {
    std::set<std::pair<NodeId, NodeId>> present;
    for (const Edge& e : edges) present.insert({std::min(e.src, e.dst), std::max(e.src, e.dst)});
    const auto capacity = static_cast<std::size_t>(total) * (total - 1) / 2;
    std::size_t added = 0;
    while (added < noise && present.size() < capacity) {
      const auto a = static_cast<NodeId>(uniform_index(rng, total));
      const auto b = static_cast<NodeId>(uniform_index(rng, total));
      if (a == b) continue;
      if (!present.insert({std::min(a, b), std::max(a, b)}).second) continue;
      edges.push_back({std::min(a, b), std::max(a, b)});
      ++added;
    }
  }

  std::vector<NodeId> order(total);
  std::iota(order.begin(), order.end(), 0);
  for (int i = total - 1; i > 0; --i) {
    std::swap(order[i], order[uniform_index(rng, static_cast<std::uint64_t>(i) + 1)]);
  }
  const auto num_train = static_cast<int>(std::lround(spec.train_fraction * total));
  const auto num_val = static_cast<int>(std::lround(spec.val_fraction * total));
  std::vector<Split> splits(total, Split::kTest);
  for (int i = 0; i < total; ++i) {
    if (i < num_train) {
      splits[order[i]] = Split::kTrain;
    } else if (i < num_train + num_val) {
      splits[order[i]] = Split::kVal;
    }
  }

  Matrix features = Matrix::Ones(total, spec.feature_dim);
  SyntheticDataset data;
  data.graph = Graph::Build(std::move(edges), std::move(features), std::move(labels),
                            std::move(splits), /*undirected=*/true, std::nullopt,
                            num_classes(spec.motif));
  data.truth = std::move(truth);
  data.spec = spec;
  return data;
}

std::vector<EdgeIndex> groundtruth_edges(const GroundTruth& truth, const Graph& g,
                                         NodeId target) {
  if (target < 0 || target >= static_cast<NodeId>(truth.motif_of.size())) {
    throw std::out_of_range("target outside ground truth");
  }
  const int motif = truth.motif_of[target];
  if (motif < 0) {
    throw std::invalid_argument("node " + std::to_string(target) +
                                " is a base node and has no ground truth");
  }
  const auto& members = truth.members.at(motif);
  std::vector<EdgeIndex> result;
  for (NodeId u : members) {
    const auto [begin, end] = g.out_edge_range(u);
    for (EdgeIndex e = begin; e < end; ++e) {
      const NodeId v = g.edge(e).dst;
      if (v >= 0 && static_cast<std::size_t>(v) < truth.motif_of.size() &&
          truth.motif_of[v] == motif) {
        result.push_back(e);
      }
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

void write_synthetic_bundle(const SyntheticDataset& data,
                            const std::filesystem::path& dir) {
  write_bundle(data.graph, dir, {{"synthetic", spec_to_json(data.spec)}});
  std::ofstream out(dir / "groundtruth.json", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (dir / "groundtruth.json").string());
  out << data.truth.ToJson().dump() << '\n';
}

GroundTruth read_groundtruth(const std::filesystem::path& dir) {
  std::ifstream in(dir / "groundtruth.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "groundtruth.json").string());
  return GroundTruth::FromJson(nlohmann::json::parse(in));
}

}  // namespace gnnx
