#ifndef GNNX_BUNDLE_HPP_
#define GNNX_BUNDLE_HPP_

#include <filesystem>

#include <nlohmann/json.hpp>

#include "gnnx/graph.hpp"

namespace gnnx {

// Graph-bundle directory:
//   meta.json     {num_nodes, feature_dim, num_classes, undirected, ...}
//   edges.csv     src,dst[,weight]
//   features.csv  one comma-separated row per node, no header
//   labels.csv    node,label
//   splits.csv    node,split
//
// `extra_meta` keys are merged into meta.json; read_bundle_meta returns them.
void write_bundle(const Graph& g, const std::filesystem::path& dir,
                  const nlohmann::json& extra_meta = nlohmann::json::object());

Graph read_bundle(const std::filesystem::path& dir);
nlohmann::json read_bundle_meta(const std::filesystem::path& dir);

}  // namespace gnnx

#endif  // GNNX_BUNDLE_HPP_
