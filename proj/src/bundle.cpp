#include "gnnx/bundle.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

#include "csv.hpp"

namespace gnnx {

namespace fs = std::filesystem;

namespace {

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void expect_header(const std::vector<std::string>& lines,
                   std::string_view header, const fs::path& path) {
  if (lines.empty() || lines.front().rfind(header, 0) != 0) {
    throw std::runtime_error(path.string() + ": expected header '" +
                             std::string(header) + "'");
  }
}

}  // namespace

void write_bundle(const Graph& g, const fs::path& dir,
                  const nlohmann::json& extra_meta) {
  fs::create_directories(dir);

  nlohmann::json meta = extra_meta;
  meta["num_nodes"] = g.num_nodes();
  meta["feature_dim"] = g.feature_dim();
  meta["num_classes"] = g.num_classes();
  meta["undirected"] = g.undirected();
  open_for_write(dir / "meta.json") << meta.dump(2) << '\n';

  {
    auto out = open_for_write(dir / "edges.csv");
    out << (g.has_edge_weights() ? "src,dst,weight\n" : "src,dst\n");
    for (EdgeIndex e = 0; e < g.num_edges(); ++e) {
      out << g.edge(e).src << ',' << g.edge(e).dst;
      if (g.has_edge_weights()) out << ',' << csv::format_double(g.edge_weights()[e]);
      out << '\n';
    }
  }
  {
    auto out = open_for_write(dir / "features.csv");
    for (Eigen::Index v = 0; v < g.features().rows(); ++v) {
      for (Eigen::Index j = 0; j < g.features().cols(); ++j) {
        if (j > 0) out << ',';
        out << csv::format_double(g.features()(v, j));
      }
      out << '\n';
    }
  }
  {
    auto out = open_for_write(dir / "labels.csv");
    out << "node,label\n";
    for (NodeId v = 0; v < g.num_nodes(); ++v) out << v << ',' << g.labels()[v] << '\n';
  }
  {
    auto out = open_for_write(dir / "splits.csv");
    out << "node,split\n";
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      out << v << ',' << to_string(g.splits()[v]) << '\n';
    }
  }
}

nlohmann::json read_bundle_meta(const fs::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "meta.json").string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error((dir / "meta.json").string() + ": " + e.what());
  }
}

Graph read_bundle(const fs::path& dir) {
  const nlohmann::json meta = read_bundle_meta(dir);
  const int n = meta.at("num_nodes").get<int>();
  const int feature_dim = meta.at("feature_dim").get<int>();
  const int num_classes = meta.at("num_classes").get<int>();
  const bool undirected = meta.at("undirected").get<bool>();

  std::vector<Edge> edges;
  std::optional<std::vector<double>> weights;
  {
    const fs::path path = dir / "edges.csv";
    const auto lines = csv::read_lines(path);
    expect_header(lines, "src,dst", path);
    const bool weighted = lines.front() == "src,dst,weight";
    if (weighted) weights.emplace();
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto fields = csv::split(lines[i]);
      if (fields.size() != (weighted ? 3u : 2u)) {
        throw std::runtime_error(path.string() + ": bad row " + std::to_string(i));
      }
      edges.push_back({csv::parse_number<int>(fields[0], "node id"),
                       csv::parse_number<int>(fields[1], "node id")});
      if (weighted) weights->push_back(csv::parse_number<double>(fields[2], "weight"));
    }
  }

  Matrix features(n, feature_dim);
  {
    const fs::path path = dir / "features.csv";
    const auto lines = csv::read_lines(path);
    if (lines.size() != static_cast<std::size_t>(n)) {
      throw std::runtime_error(path.string() + ": expected " + std::to_string(n) +
                               " rows, found " + std::to_string(lines.size()));
    }
    for (int v = 0; v < n; ++v) {
      const auto fields = csv::split(lines[v]);
      if (fields.size() != static_cast<std::size_t>(feature_dim)) {
        throw std::runtime_error(path.string() + ": row " + std::to_string(v) +
                                 " has " + std::to_string(fields.size()) +
                                 " values, expected " + std::to_string(feature_dim));
      }
      for (int j = 0; j < feature_dim; ++j) {
        features(v, j) = csv::parse_number<double>(fields[j], "feature");
      }
    }
  }

  auto read_node_column = [&](const std::string& file, std::string_view header,
                              auto parse) {
    const fs::path path = dir / file;
    const auto lines = csv::read_lines(path);
    expect_header(lines, header, path);
    using Value = decltype(parse(std::string_view{}));
    std::vector<Value> values(n);
    std::vector<bool> seen(n, false);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto fields = csv::split(lines[i]);
      if (fields.size() != 2) {
        throw std::runtime_error(path.string() + ": bad row " + std::to_string(i));
      }
      const int v = csv::parse_number<int>(fields[0], "node id");
      if (v < 0 || v >= n || seen[v]) {
        throw std::runtime_error(path.string() + ": invalid or repeated node " +
                                 std::to_string(v));
      }
      seen[v] = true;
      values[v] = parse(fields[1]);
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw std::runtime_error(path.string() + ": missing nodes");
    }
    return values;
  };

  auto labels = read_node_column("labels.csv", "node,label", [](std::string_view f) {
    return csv::parse_number<int>(f, "label");
  });
  auto splits = read_node_column("splits.csv", "node,split",
                                 [](std::string_view f) { return parse_split(f); });

  return Graph::Build(std::move(edges), std::move(features), std::move(labels),
                      std::move(splits), undirected, std::move(weights), num_classes);
}

}  // namespace gnnx
