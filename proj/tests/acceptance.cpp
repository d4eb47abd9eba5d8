// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gnnx/bench.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace gnnx;

namespace {

int failures = 0;

void verdict(int criterion, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("criterion %d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path work_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "gnnx_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void log_line(const std::string& text) { std::cerr << "  " << text << "\n"; }

// Test accuracy of the default recipe, 5 seeds, within a time budget per dataset.
void criterion_training() {
  const TrainRecipe recipe;
  struct Target {
    const char* name;
    double lo;
    double hi;
  };
  bool pass = true;
  std::string detail;
  for (const Target& t : {Target{"ba_house", 0.95, 1.0}, Target{"tree_grid", 0.84, 0.95}}) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> acc;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto data = generate(named_spec(t.name, seed));
      auto cfg = recipe.train;
      cfg.seed = seed;
      acc.push_back(train(data.graph, recipe.ShapeFor(data.graph), cfg).report.accuracy);
    }
    const double secs = seconds_since(start);
    const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / 5.0;
    const bool ok = mean >= t.lo && mean <= t.hi && secs <= 300.0;
    pass = pass && ok;
    detail += std::string(t.name) + " mean acc " + fmt(mean) + " in [" + fmt(t.lo, 2) + ", " +
              fmt(t.hi, 2) + "] (";
    for (std::size_t i = 0; i < acc.size(); ++i) detail += (i ? " " : "") + fmt(acc[i], 3);
    detail += ") " + fmt(secs, 1) + " s for 5 seeds; ";
  }
  verdict(1, pass, detail);
}

// Analytic gradients against central differences on 20 random toys.
void criterion_gradients() {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const bool readout = trial % 2 == 1;
    const int n = 6 + static_cast<int>(uniform_index(rng, 6));
    const auto g = testing::random_graph(rng, n, 2 * n, 3, 3, trial % 3 != 0);
    std::vector<double> w(g.num_edges());
    for (auto& v : w) v = 0.2 + 0.6 * uniform01(rng);
    const auto model = testing::random_model(rng, {3, 4, 3, 3, 0.0, readout});
    std::vector<NodeId> nodes;
    for (NodeId v = 0; v < n; v += 2) nodes.push_back(v);
    worst = std::max(worst, testing::check_gradients(model, g, w, nodes, 5e-3, 1e-5).worst());
  }
  verdict(2, worst <= 1e-4, "worst relative error " + std::to_string(worst) + " <= 1e-4");
}

// Identity masks keep every prediction; empty explanations leave the full graph as complement.
void criterion_fidelity_sanity() {
  const TrainRecipe recipe;
  std::size_t checked = 0;
  double worst_minus = 0.0, worst_plus = 0.0;
  for (const auto& name : named_spec_names()) {
    const auto data = generate(named_spec(name, 0));
    const auto model =
        train(data.graph, recipe.ShapeFor(data.graph), recipe.train).model;
    const auto predictions = predict(model, data.graph, data.graph.edge_weights()).labels;
    const auto nodes =
        select_nodes(data.graph, predictions, &data.truth, NodeSelection{}, 10, 0);
    for (const auto& explainer_name : explainer_names()) {
      const auto explainer = make_explainer({explainer_name});
      for (NodeId v : nodes) {
        const auto cg = k_hop_subgraph(data.graph, v, model.num_layers());
        const std::vector<double> ones(cg.subgraph.num_edges(), 1.0);
        const auto full = predict_masked(model, cg, ones);
        const auto explanation = explainer(model, cg, v, full.label, 0);
        // Identity and empty masks aligned to the explainer's output.
        const std::vector<double> identity(explanation.edge_mask.size(), 1.0);
        const std::vector<double> empty(explanation.edge_mask.size(), 0.0);
        const auto kept = predict_masked(model, cg, identity);
        const auto complement = predict_masked(model, cg, complement_mask(empty));
        const FidelityInput in{data.graph.labels()[v], full.label, kept.label, complement.label,
                               full.probs, kept.probs, complement.probs};
        worst_minus = std::max(
            worst_minus, fidelity({&in, 1}, FidelityKind::kMinus, FidelityForm::kAcc, Focus::kModel));
        worst_plus = std::max(
            worst_plus, fidelity({&in, 1}, FidelityKind::kPlus, FidelityForm::kAcc, Focus::kModel));
        ++checked;
      }
    }
  }
  verdict(3, worst_minus == 0.0 && worst_plus == 0.0,
          std::to_string(checked) + " (dataset, explainer, node) cases; max identity fid-acc " +
              fmt(worst_minus, 1) + ", max empty-complement fid+acc " + fmt(worst_plus, 1));
}

std::map<std::string, double> mean_by_explainer(const std::vector<EvalRecord>& records,
                                                double (*metric)(const EvalRecord&)) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    auto& [sum, count] = acc[r.explainer];
    sum += metric(r);
    ++count;
  }
  std::map<std::string, double> out;
  for (const auto& [name, v] : acc) out[name] = v.first / static_cast<double>(v.second);
  return out;
}

// Ground-truth F1 of PageRank against Random and Saliency on motif nodes.
void criterion_ranking() {
  bool pass = true;
  std::string detail;
  for (const char* name : {"ba_house", "tree_cycle"}) {
    ExperimentConfig config;
    config.dataset = name;
    config.explainers = {{"pagerank"}, {"random"}, {"saliency"}};
    config.strategy = Transform::TopK(6, false);
    config.k_sweep = {6};
    config.node_policy = NodeSelection::Parse("motif_only");
    const auto dir = work_dir(std::string("ranking_") + name);
    run(config, {dir});
    const auto records = read_records(dir / "records.csv");
    std::vector<EvalRecord> with_truth;
    for (const auto& r : records) {
      if (r.gt_f1) with_truth.push_back(r);
    }
    const auto f1 = mean_by_explainer(with_truth, [](const EvalRecord& r) { return *r.gt_f1; });
    const double pr = f1.at("pagerank"), rnd = f1.at("random"), sal = f1.at("saliency");
    const bool ok = pr >= rnd + 0.3 && pr >= sal;
    pass = pass && ok;
    detail += std::string(name) + " F1 pagerank " + fmt(pr, 3) + " random " + fmt(rnd, 3) +
              " saliency " + fmt(sal, 3) + "; ";
  }
  verdict(4, pass, detail);
}

// Runs the default configuration on BA-House into `dir`.
RunSummary default_run(const fs::path& dir, std::optional<std::size_t> stop_after = std::nullopt) {
  RunOptions options;
  options.out_dir = dir;
  options.stop_after_units = stop_after;
  return run(ExperimentConfig{}, options);
}

// Explanation time of Occlusion against Saliency on every named dataset with
// at least 100 test nodes.
void criterion_efficiency() {
  bool pass = true;
  int evaluated = 0;
  std::string detail;
  for (const auto& name : named_spec_names()) {
    const auto data = generate(named_spec(name, 0));
    const auto test = std::count(data.graph.splits().begin(), data.graph.splits().end(),
                                 Split::kTest);
    if (test < 100) continue;
    ExperimentConfig config;
    config.dataset = name;
    config.explainers = {{"occlusion"}, {"saliency"}};
    config.k_sweep = {10};
    const auto dir = work_dir("efficiency_" + name);
    run(config, {dir});
    const auto records = read_records(dir / "records.csv");
    const auto time = mean_by_explainer(records, [](const EvalRecord& r) { return r.time_ms; });
    std::map<std::uint64_t, std::set<NodeId>> nodes;
    for (const auto& r : records) nodes[r.seed].insert(r.node);
    std::size_t fewest = 100;
    for (const auto& [seed, set] : nodes) fewest = std::min(fewest, set.size());
    const double occ = time.at("occlusion"), sal = time.at("saliency");
    pass = pass && fewest == 100 && occ >= 10.0 * sal;
    ++evaluated;
    detail += name + " occlusion " + fmt(occ, 3) + " ms vs saliency " + fmt(sal, 3) + " ms (" +
              fmt(occ / sal, 1) + "x, " + std::to_string(fewest) + " nodes per seed); ";
  }
  verdict(5, pass && evaluated > 0, detail);
}

std::size_t dfs_components(const std::vector<Edge>& edges) {
  std::map<NodeId, std::vector<NodeId>> adj;
  for (const auto& e : edges) {
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  std::set<NodeId> seen;
  std::size_t count = 0;
  for (const auto& [start, unused] : adj) {
    if (!seen.insert(start).second) continue;
    ++count;
    std::vector<NodeId> stack{start};
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

void criterion_metric_units() {
  std::vector<std::string> failed;
  if (std::abs(characterization(0.8, 0.6, 0.5, 0.5) - 0.5333333333333333) > 1e-9) {
    failed.push_back("characterization");
  }
  std::vector<Edge> path;
  for (int i = 0; i < 10; ++i) path.push_back({i, i + 1});
  const auto g = Graph::Build(path, Matrix::Ones(11, 1), std::vector<int>(11, 0),
                              std::vector<Split>(11, Split::kTest), false);
  if (std::abs(mask_properties(std::vector<double>(10, 0.5), g).entropy - std::log(10.0)) > 1e-9) {
    failed.push_back("entropy");
  }
  using V = std::vector<double>;
  if (transform(V{0.9, 0.1, 0.5, 0.5}, Transform::TopK(2, true)) != V{0.9, 0, 0.5, 0}) {
    failed.push_back("topk");
  }
  if (transform(V{0.9, 0.1, 0.5}, Transform::Threshold(0.5)) != V{0.9, 0, 0}) {
    failed.push_back("threshold");
  }
  V ramp(10);
  for (int i = 0; i < 10; ++i) ramp[i] = 0.1 * (i + 1);
  const auto sparse = transform(ramp, Transform::Sparsity(0.7));
  if (std::count_if(sparse.begin(), sparse.end(), [](double v) { return v > 0; }) != 3) {
    failed.push_back("sparsity");
  }
  const auto und = Graph::Build({{0, 1}, {1, 2}}, Matrix::Ones(3, 1), {0, 0, 0},
                                std::vector<Split>(3, Split::kTest), true);
  if (transform(V{0.2, 0.9, 0.5, 0.1}, Transform::TopK(1, false), und.edge_pair()) !=
      V{0.2, 0.9, 0, 0}) {
    failed.push_back("undirected topk");
  }
  Rng rng(11);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 40));
    const int m = static_cast<int>(uniform_index(rng, 2 * n));
    std::vector<Edge> edges;
    for (int i = 0; i < m; ++i) {
      edges.push_back({static_cast<NodeId>(uniform_index(rng, n)),
                       static_cast<NodeId>(uniform_index(rng, n))});
    }
    if (connected_components(edges) != dfs_components(edges)) ++mismatches;
  }
  if (mismatches) failed.push_back("connected components (" + std::to_string(mismatches) + ")");
  std::string detail = "characterization, entropy, topk, threshold, sparsity, 200 component sets";
  if (!failed.empty()) {
    detail = "failed:";
    for (const auto& f : failed) detail += " " + f;
  }
  verdict(6, failed.empty(), detail);
}

std::vector<std::string> records_without_time(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::string> out;
  std::size_t time_col = 0;
  bool header = true;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> fields;
    std::stringstream s(line);
    for (std::string f; std::getline(s, f, ',');) fields.push_back(f);
    if (header) {
      time_col = std::find(fields.begin(), fields.end(), "time_ms") - fields.begin();
      header = false;
    }
    std::string kept;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i != time_col) kept += fields[i] + ',';
    }
    out.push_back(kept);
  }
  return out;
}

void criterion_determinism() {
  const auto first = work_dir("default_a");
  RunOptions options;
  options.out_dir = first;
  options.log = log_line;
  run(ExperimentConfig{}, options);
  const auto second = work_dir("default_b");
  const auto s2 = default_run(second);
  const auto a = records_without_time(first / "records.csv");
  const bool identical = s2.complete && a == records_without_time(second / "records.csv");

  const auto resumed = work_dir("default_resumed");
  const auto partial = default_run(resumed, s2.units_total / 3);
  const auto finished = default_run(resumed);
  const bool converged = !partial.complete && finished.complete &&
                         finished.units_resumed == partial.units_evaluated &&
                         a == records_without_time(resumed / "records.csv");
  verdict(7, identical && converged,
          std::to_string(a.size() - 1) + " records; repeat run identical: " +
              (identical ? "yes" : "no") + "; resumed after " +
              std::to_string(partial.units_evaluated) + "/" + std::to_string(s2.units_total) +
              " units identical: " + (converged ? "yes" : "no"));
}

// Phenomenon-focus characterization on correctly and wrongly predicted Tree-Grid nodes.
void criterion_correct_vs_wrong() {
  std::map<std::string, double> mean;
  std::map<std::string, std::size_t> count;
  for (const char* policy : {"correct_only", "wrong_only"}) {
    ExperimentConfig config;
    config.dataset = "tree_grid";
    config.focus = {Focus::kPhenomenon};
    config.node_policy = NodeSelection::Parse(policy);
    const auto dir = work_dir(std::string("split_") + policy);
    RunOptions options;
    options.out_dir = dir;
    options.log = log_line;
    run(config, options);
    const auto records = read_records(dir / "records.csv");
    const auto agg = aggregate(records);
    double sum = 0.0;
    for (const auto& cell : agg.cells) sum += cell.charact.mean;
    mean[policy] = sum / static_cast<double>(agg.cells.size());
    std::set<NodeId> nodes;
    for (const auto& r : records) nodes.insert(r.node);
    count[policy] = nodes.size();
  }
  verdict(8, mean["wrong_only"] < mean["correct_only"],
          "mean charact wrong_only " + fmt(mean["wrong_only"]) + " (" +
              std::to_string(count["wrong_only"]) + " nodes) < correct_only " +
              fmt(mean["correct_only"]) + " (" + std::to_string(count["correct_only"]) +
              " nodes)");
}

template <typename F>
void guarded(int criterion, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    verdict(criterion, false, std::string("error: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded(1, criterion_training);
  guarded(2, criterion_gradients);
  guarded(3, criterion_fidelity_sanity);
  guarded(4, criterion_ranking);
  guarded(5, criterion_efficiency);
  guarded(6, criterion_metric_units);
  guarded(7, criterion_determinism);
  guarded(8, criterion_correct_vs_wrong);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
