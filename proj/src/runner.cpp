#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>

#include "csv.hpp"
#include "gnnx/bench.hpp"
#include "gnnx/bundle.hpp"

namespace gnnx {

namespace {

constexpr std::string_view kSkipHeader = "dataset,explainer,seed,node,reason";

struct Unit {
  std::uint64_t seed = 0;
  std::size_t explainer = 0;
  NodeId node = 0;
};

using UnitKey = std::tuple<std::uint64_t, std::string, NodeId>;

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  return text;
}

// Every record of one (seed, explainer, node) unit.
std::vector<EvalRecord> evaluate_unit(const ExperimentConfig& config, const LoadedDataset& data,
                                      const GcnModel& model, const Explainer& explainer,
                                      const Unit& unit) {
  const Graph& g = data.graph;
  const ComputationGraph cg = k_hop_subgraph(g, unit.node, model.num_layers());
  const Graph& sub = cg.subgraph;
  const std::vector<double> ones(sub.num_edges(), 1.0);
  const MaskedPrediction full = predict_masked(model, cg, ones);
  const int y = g.labels()[unit.node];
  const int y_hat = full.label;

  std::optional<std::vector<EdgeIndex>> truth_edges;
  if (data.truth && data.truth->motif_of.at(unit.node) >= 0) {
    truth_edges = groundtruth_edges(*data.truth, g, unit.node);
  }

  // Phenomenon and model focus share one explanation when y == y_hat.
  std::map<int, Explanation> explanations;
  for (Focus focus : config.focus) {
    const int label = focus == Focus::kPhenomenon ? y : y_hat;
    if (!explanations.count(label)) {
      explanations.emplace(label, explainer(model, cg, unit.node, label, unit.seed));
    }
  }

  std::vector<EvalRecord> records;
  Transform strategy = config.strategy;
  for (int k : config.EffectiveK()) {
    if (strategy.kind == Transform::Kind::kTopK) strategy.k = k;
    std::map<std::pair<int, MaskNature>, std::pair<MaskedPrediction, MaskedPrediction>> probes;
    for (Focus focus : config.focus) {
      const int label = focus == Focus::kPhenomenon ? y : y_hat;
      const Explanation& explanation = explanations.at(label);
      const auto transformed = transform(explanation.edge_mask, strategy, sub.edge_pair());
      const MaskProperties props = mask_properties(transformed, sub);
      std::optional<double> gt_f1;
      if (truth_edges) {
        std::vector<Edge> chosen, expected;
        for (EdgeIndex e = 0; e < sub.num_edges(); ++e) {
          if (transformed[e] > 0.0) {
            chosen.push_back({cg.node_map[sub.edge(e).src], cg.node_map[sub.edge(e).dst]});
          }
        }
        for (EdgeIndex e : *truth_edges) expected.push_back(g.edge(e));
        gt_f1 = groundtruth_accuracy(chosen, expected).f1;
      }
      for (MaskNature nature : config.mask_nature) {
        auto it = probes.find({label, nature});
        if (it == probes.end()) {
          const auto mask = nature == MaskNature::kHard ? harden(transformed) : transformed;
          it = probes
                   .emplace(std::pair{label, nature},
                            std::pair{predict_masked(model, cg, mask),
                                      predict_masked(model, cg, complement_mask(mask))})
                   .first;
        }
        const auto& [masked, complement] = it->second;
        const FidelityInput input{y,          y_hat,         masked.label, complement.label,
                                  full.probs, masked.probs, complement.probs};
        const FidelityScores scores = fidelity_scores({&input, 1}, focus);

        EvalRecord r;
        r.dataset = data.name;
        r.explainer = explainer.name;
        r.seed = unit.seed;
        r.focus = focus;
        r.mask_nature = nature;
        r.strategy = config.strategy.ToString();
        r.k = k;
        r.node = unit.node;
        r.fid_plus_acc = scores.plus_acc;
        r.fid_minus_acc = scores.minus_acc;
        r.fid_plus_prob = scores.plus_prob;
        r.fid_minus_prob = scores.minus_prob;
        r.charact =
            characterization(scores.plus_acc, scores.minus_acc, config.w_plus, config.w_minus);
        r.gt_f1 = gt_f1;
        r.time_ms = explanation.time_ms;
        r.mask_size = props.size;
        r.mask_entropy = props.entropy;
        r.mask_max = props.max_value;
        r.cc_ratio = props.cc_ratio;
        records.push_back(std::move(r));
      }
    }
  }
  return records;
}

nlohmann::json resume_identity(const ExperimentConfig& config) {
  nlohmann::json j = config.ToJson();
  j.erase("workers");
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

// Records already on disk, tolerating a torn final line.
std::vector<EvalRecord> salvage_records(const std::filesystem::path& path) {
  std::vector<EvalRecord> records;
  if (!std::filesystem::exists(path)) return records;
  const auto lines = csv::read_lines(path);
  if (lines.empty()) return records;
  if (lines[0] != records_header()) {
    throw std::runtime_error(path.string() + ": unexpected records header");
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      records.push_back(parse_record(lines[i]));
    } catch (const std::runtime_error&) {
      if (i + 1 != lines.size()) throw;
    }
  }
  return records;
}

}  // namespace

MaskedPrediction predict_masked(const GcnModel& model, const ComputationGraph& cg,
                                std::span<const double> mask) {
  const auto input = apply_mask(cg.subgraph, mask);
  const RowVector logits =
      forward_node(model, normalize_adjacency(cg, input.edge_weights), input.features,
                   cg.target_local);
  const Matrix probs = softmax_rows(logits);
  MaskedPrediction p;
  p.probs.assign(probs.data(), probs.data() + probs.size());
  p.label = argmax_rows(probs)[0];
  return p;
}

LoadedDataset load_dataset(const std::string& source, std::uint64_t seed) {
  const auto names = named_spec_names();
  if (std::find(names.begin(), names.end(), source) != names.end()) {
    auto data = generate(named_spec(source, seed));
    return {source, std::move(data.graph), std::move(data.truth)};
  }
  const std::filesystem::path path(source);
  if (std::filesystem::is_directory(path)) {
    LoadedDataset out;
    out.graph = read_bundle(path);
    out.name = path.filename().empty() ? path.parent_path().filename().string()
                                       : path.filename().string();
    if (std::filesystem::exists(path / "groundtruth.json")) out.truth = read_groundtruth(path);
    return out;
  }
  if (std::filesystem::is_regular_file(path)) {
    std::ifstream in(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(path.string() + ": " + e.what());
    }
    auto spec = spec_from_json(j);
    auto data = generate(spec);
    return {spec.name, std::move(data.graph), std::move(data.truth)};
  }
  throw std::invalid_argument("dataset '" + source +
                              "' is neither a named dataset, a spec file nor a bundle directory");
}

RunSummary run(const ExperimentConfig& config, const RunOptions& options) {
  config.Validate();
  const LoadedDataset data = load_dataset(config.dataset, config.dataset_seed);
  GcnModel model;
  if (!config.model.empty()) {
    model = load_checkpoint(config.model);
  } else {
    std::filesystem::create_directories(options.out_dir);
    const auto cached = options.out_dir / "model.gnnx";
    const auto config_path = options.out_dir / "config.json";
    bool reuse = false;
    if (std::filesystem::exists(cached) && std::filesystem::exists(config_path)) {
      std::ifstream in(config_path);
      reuse = nlohmann::json::parse(in, nullptr, false) == resume_identity(config);
    }
    if (reuse) {
      model = load_checkpoint(cached);
    } else {
      if (options.log) options.log("training model on " + data.name);
      auto trained = train(data.graph, config.recipe.ShapeFor(data.graph), config.recipe.train);
      if (options.log) {
        options.log("test accuracy " + csv::format_double(trained.report.accuracy));
      }
      model = std::move(trained.model);
      save_checkpoint(model, cached);
    }
  }
  return run(config, data, model, options);
}

RunSummary run(const ExperimentConfig& config, const LoadedDataset& data, const GcnModel& model,
               const RunOptions& options) {
  config.Validate();
  if (model.input_dim() != data.graph.feature_dim() ||
      model.num_classes() != data.graph.num_classes()) {
    throw std::invalid_argument("model shape does not fit dataset " + data.name);
  }
  if (data.name.find_first_of(",\"\n") != std::string::npos) {
    throw std::invalid_argument("dataset name may not contain commas, quotes or newlines");
  }
  const auto& out_dir = options.out_dir;
  std::filesystem::create_directories(out_dir);
  const auto config_path = out_dir / "config.json";
  const auto records_path = out_dir / "records.csv";
  const auto skips_path = out_dir / "skipped.csv";

  const nlohmann::json identity = resume_identity(config);
  if (std::filesystem::exists(config_path)) {
    std::ifstream in(config_path);
    const auto existing = nlohmann::json::parse(in, nullptr, false);
    if (existing != identity) {
      throw std::runtime_error(out_dir.string() +
                               " holds results of a different experiment configuration");
    }
  } else if (std::filesystem::exists(records_path)) {
    throw std::runtime_error(out_dir.string() + " holds records without a config.json");
  } else {
    write_text(config_path, identity.dump(2) + "\n");
  }

  std::vector<Explainer> explainers;
  for (const auto& spec : config.explainers) explainers.push_back(make_explainer(spec));

  RunSummary summary;
  const Prediction full = predict(model, data.graph, data.graph.edge_weights());
  std::vector<Unit> units;
  for (std::uint64_t seed : config.seeds) {
    std::string warning;
    const auto nodes =
        select_nodes(data.graph, full.labels, data.truth ? &*data.truth : nullptr,
                     config.node_policy, config.num_nodes, seed, &warning);
    if (!warning.empty()) {
      summary.warnings.push_back("seed " + std::to_string(seed) + ": " + warning);
      if (options.log) options.log(summary.warnings.back());
    }
    for (std::size_t e = 0; e < explainers.size(); ++e) {
      for (NodeId v : nodes) units.push_back({seed, e, v});
    }
  }
  summary.units_total = units.size();
  const std::size_t per_unit =
      config.EffectiveK().size() * config.focus.size() * config.mask_nature.size();

  // Keep the units that an earlier run finished completely.
  std::set<UnitKey> wanted;
  for (const auto& u : units) wanted.insert({u.seed, explainers[u.explainer].name, u.node});
  std::map<UnitKey, std::vector<EvalRecord>> finished;
  for (auto& r : salvage_records(records_path)) {
    if (r.dataset != data.name) continue;
    UnitKey key{r.seed, r.explainer, r.node};
    if (wanted.count(key)) finished[key].push_back(std::move(r));
  }
  std::vector<EvalRecord> kept;
  std::set<UnitKey> done;
  for (auto& [key, records] : finished) {
    if (records.size() != per_unit) continue;
    done.insert(key);
    for (auto& r : records) kept.push_back(std::move(r));
  }
  std::vector<SkipRecord> skips;
  for (auto& s : read_skips(skips_path)) {
    UnitKey key{s.seed, s.explainer, s.node};
    if (s.dataset == data.name && wanted.count(key) && !done.count(key)) {
      done.insert(key);
      skips.push_back(std::move(s));
    }
  }
  summary.units_resumed = done.size();
  std::sort(kept.begin(), kept.end(), record_key_less);
  write_records(records_path, kept);
  {
    std::string text(kSkipHeader);
    text += '\n';
    for (const auto& s : skips) {
      text += s.dataset + ',' + s.explainer + ',' + std::to_string(s.seed) + ',' +
              std::to_string(s.node) + ',' + one_line(s.reason) + '\n';
    }
    write_text(skips_path, text);
  }

  std::vector<Unit> pending;
  for (const auto& u : units) {
    if (!done.count({u.seed, explainers[u.explainer].name, u.node})) pending.push_back(u);
  }
  const std::size_t budget = options.stop_after_units.value_or(pending.size());

  std::ofstream records_out(records_path, std::ios::binary | std::ios::app);
  std::ofstream skips_out(skips_path, std::ios::binary | std::ios::app);
  if (!records_out || !skips_out) throw std::runtime_error("cannot append to " + out_dir.string());
  std::mutex sink;
  std::atomic<std::size_t> next{0};
  std::size_t evaluated = 0;
  std::size_t new_skips = 0;
  std::exception_ptr failure;

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size() || i >= budget) return;
      const Unit& unit = pending[i];
      const Explainer& explainer = explainers[unit.explainer];
      std::vector<EvalRecord> records;
      std::string error;
      try {
        records = evaluate_unit(config, data, model, explainer, unit);
      } catch (const std::exception& e) {
        error = e.what();
      }
      std::lock_guard lock(sink);
      try {
        if (error.empty()) {
          std::string text;
          for (const auto& r : records) text += format_record(r) + '\n';
          records_out << text << std::flush;
        } else {
          skips_out << data.name << ',' << explainer.name << ',' << unit.seed << ',' << unit.node
                    << ',' << one_line(error) << '\n'
                    << std::flush;
          ++new_skips;
          if (options.log) {
            options.log("skipped " + explainer.name + " on node " + std::to_string(unit.node) +
                        ": " + error);
          }
        }
        if (!records_out || !skips_out) throw std::runtime_error("failed writing results");
        ++evaluated;
      } catch (...) {
        if (!failure) failure = std::current_exception();
        next.store(pending.size());
      }
    }
  };

  const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t num_workers = std::min<std::size_t>(
      config.workers > 0 ? static_cast<std::size_t>(config.workers) : hardware,
      std::max<std::size_t>(1, pending.size()));
  if (num_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < num_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  records_out.close();
  skips_out.close();
  if (failure) std::rethrow_exception(failure);

  summary.units_evaluated = evaluated;
  summary.skipped = skips.size() + new_skips;
  summary.complete = summary.units_resumed + evaluated == units.size();
  if (summary.complete) {
    auto all = read_records(records_path);
    std::sort(all.begin(), all.end(), record_key_less);
    write_records(records_path, all);
    summary.records = all.size();
  } else {
    summary.records = read_records(records_path).size();
  }
  return summary;
}

}  // namespace gnnx
