#ifndef GNNX_SYNTHETIC_HPP_
#define GNNX_SYNTHETIC_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gnnx/graph.hpp"

namespace gnnx {

enum class BaseKind { kBarabasiAlbert, kBinaryTree };
enum class MotifKind { kHouse, kGrid, kCycle, kBottle };

std::string_view to_string(MotifKind kind);
MotifKind parse_motif(std::string_view text);

struct BaseGraphSpec {
  BaseKind kind = BaseKind::kBarabasiAlbert;
  int num_nodes = 300;  // Barabasi-Albert only
  int attachments = 5;  // Barabasi-Albert only
  int height = 8;       // binary tree only
};

// Base graph plus planted motifs whose members form the ground truth.
struct SyntheticSpec {
  std::string name;
  BaseGraphSpec base;
  MotifKind motif = MotifKind::kHouse;
  int motif_count = 80;
  double noise_edge_fraction = 0.0;
  int feature_dim = 10;
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument describing the first violated constraint.
  void Validate() const;
};

// BA-House, BA-Grid, Tree-Cycle, Tree-Grid, BA-Bottle under the names
// ba_house, ba_grid, tree_cycle, tree_grid, ba_bottle.
SyntheticSpec named_spec(std::string_view name, std::uint64_t seed = 0);
std::vector<std::string> named_spec_names();

SyntheticSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const SyntheticSpec& spec);

int motif_size(MotifKind kind);
// Undirected internal edges of a motif over local positions [0, size).
std::vector<Edge> motif_edges(MotifKind kind);

// Class of a node at `position` inside a motif. Throws std::out_of_range for
// positions outside the motif.
int label_rule(MotifKind kind, int position);
int num_classes(MotifKind kind);

struct GroundTruth {
  std::vector<int> motif_of;  // -1 for base nodes
  std::vector<std::vector<NodeId>> members;

  nlohmann::json ToJson() const;
  static GroundTruth FromJson(const nlohmann::json& j);
};

struct SyntheticDataset {
  Graph graph;
  GroundTruth truth;
  SyntheticSpec spec;
};

SyntheticDataset generate(const SyntheticSpec& spec);

// Directed edge indices of `g` with both endpoints in the target's motif.
// Throws std::invalid_argument when the target is a base node.
std::vector<EdgeIndex> groundtruth_edges(const GroundTruth& truth, const Graph& g,
                                         NodeId target);

// Writes the graph bundle with the SyntheticSpec in meta.json, plus groundtruth.json.
void write_synthetic_bundle(const SyntheticDataset& data,
                            const std::filesystem::path& dir);
GroundTruth read_groundtruth(const std::filesystem::path& dir);

}  // namespace gnnx

#endif  // GNNX_SYNTHETIC_HPP_
