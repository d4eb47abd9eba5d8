#ifndef GNNX_BENCH_HPP_
#define GNNX_BENCH_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gnnx/explainers.hpp"
#include "gnnx/gcn.hpp"
#include "gnnx/graph.hpp"
#include "gnnx/mask.hpp"
#include "gnnx/metrics.hpp"
#include "gnnx/synthetic.hpp"

namespace gnnx {

// Architecture and optimizer settings for training a model on a dataset.
struct TrainRecipe {
  int hidden_dim = 20;
  int num_layers = 3;
  double dropout = 0.0;
  bool concat_readout = true;
  TrainConfig train;

  ModelShape ShapeFor(const Graph& g) const;
  static TrainRecipe FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

enum class NodePolicy { kTestSplit, kMotifOnly, kLabelFilter, kCorrectOnly, kWrongOnly };

struct NodeSelection {
  NodePolicy policy = NodePolicy::kTestSplit;
  int label = 0;  // kLabelFilter only

  // "test_split", "motif_only", "label_filter=2", "correct_only", "wrong_only".
  std::string ToString() const;
  static NodeSelection Parse(std::string_view text);
};

// Up to `n` test nodes passing the policy, sampled without replacement and
// returned in ascending order. motif_only uses `truth` when given and
// otherwise keeps nodes with a nonzero label. Sets `warning` when fewer than
// `n` candidates exist. Throws std::invalid_argument if none do.
std::vector<NodeId> select_nodes(const Graph& g, std::span<const int> predictions,
                                 const GroundTruth* truth, const NodeSelection& selection,
                                 int n, std::uint64_t seed, std::string* warning = nullptr);

struct ExperimentConfig {
  // Named synthetic dataset, synthetic spec JSON file or graph bundle
  // directory.
  std::string dataset = "ba_house";
  std::uint64_t dataset_seed = 0;
  // Checkpoint to explain. When empty the recipe is trained first.
  std::string model;
  TrainRecipe recipe;
  std::vector<ExplainerSpec> explainers;  // all explainers by default
  std::vector<Focus> focus{Focus::kPhenomenon, Focus::kModel};
  std::vector<MaskNature> mask_nature{MaskNature::kHard, MaskNature::kSoft};
  Transform strategy = Transform::TopK(10, false);
  // Sizes evaluated with a topk strategy; other strategies run once with k=0.
  std::vector<int> k_sweep{1, 5, 10, 15, 20, 25, 50, 100};
  int num_nodes = 100;
  NodeSelection node_policy;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  double w_plus = 0.5;
  double w_minus = 0.5;
  TypologyThresholds typology;
  int workers = 0;  // 0 uses every hardware thread

  ExperimentConfig();
  void Validate() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static ExperimentConfig FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
  // k_sweep for topk strategies, {0} otherwise.
  std::vector<int> EffectiveK() const;
};

// One explained node under one (focus, mask nature, strategy, k) setting.
struct EvalRecord {
  std::string dataset;
  std::string explainer;
  std::uint64_t seed = 0;
  Focus focus = Focus::kPhenomenon;
  MaskNature mask_nature = MaskNature::kHard;
  std::string strategy;
  int k = 0;
  NodeId node = 0;
  double fid_plus_acc = 0.0;
  double fid_minus_acc = 0.0;
  double fid_plus_prob = 0.0;
  double fid_minus_prob = 0.0;
  double charact = 0.0;
  std::optional<double> gt_f1;
  double time_ms = 0.0;
  std::size_t mask_size = 0;
  double mask_entropy = 0.0;
  double mask_max = 0.0;
  double cc_ratio = 0.0;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

// Orders by (dataset, explainer, seed, focus, mask_nature, strategy, k, node).
bool record_key_less(const EvalRecord& a, const EvalRecord& b);

std::string_view records_header();
std::string format_record(const EvalRecord& record);
// Throws std::runtime_error on malformed lines.
EvalRecord parse_record(std::string_view line);
void write_records(const std::filesystem::path& path, std::span<const EvalRecord> records);
std::vector<EvalRecord> read_records(const std::filesystem::path& path);

// A (seed, explainer, node) unit that could not be evaluated.
struct SkipRecord {
  std::string dataset;
  std::string explainer;
  std::uint64_t seed = 0;
  NodeId node = 0;
  std::string reason;
};

std::vector<SkipRecord> read_skips(const std::filesystem::path& path);

// Target prediction on the computation graph with edge weights scaled by `mask`.
struct MaskedPrediction {
  std::vector<double> probs;
  int label = 0;
};

MaskedPrediction predict_masked(const GcnModel& model, const ComputationGraph& cg,
                                std::span<const double> mask);

struct LoadedDataset {
  std::string name;
  Graph graph;
  std::optional<GroundTruth> truth;
};

// Resolves ExperimentConfig::dataset.
LoadedDataset load_dataset(const std::string& source, std::uint64_t seed = 0);

struct RunOptions {
  std::filesystem::path out_dir;
  // Stop after this many units have been evaluated, leaving a resumable
  // directory behind.
  std::optional<std::size_t> stop_after_units;
  std::function<void(const std::string&)> log;
};

struct RunSummary {
  std::size_t units_total = 0;
  std::size_t units_resumed = 0;
  std::size_t units_evaluated = 0;
  std::size_t records = 0;
  std::size_t skipped = 0;
  bool complete = false;
  std::vector<std::string> warnings;
};

// Writes config.json, records.csv and skipped.csv into out_dir (and
// model.gnnx when the model is trained). Work already recorded in out_dir by
// an interrupted run with the same config is kept. On completion records.csv
// is rewritten in key order.
RunSummary run(const ExperimentConfig& config, const RunOptions& options);
// Same, with the dataset and model supplied by the caller.
RunSummary run(const ExperimentConfig& config, const LoadedDataset& dataset,
               const GcnModel& model, const RunOptions& options);

struct MetricStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation across seeds
};

// One (explainer, focus, mask nature, strategy, k) cell: every metric is
// averaged over nodes within a seed, then summarized across seeds. charact
// is recomputed per seed from the mean fidelities.
struct CellAggregate {
  std::string explainer;
  Focus focus = Focus::kPhenomenon;
  MaskNature mask_nature = MaskNature::kHard;
  std::string strategy;
  int k = 0;
  std::size_t num_seeds = 0;
  std::size_t num_records = 0;
  MetricStats fid_plus_acc, fid_minus_acc, fid_plus_prob, fid_minus_prob, charact;
  MetricStats time_ms, mask_size, mask_entropy, cc_ratio;
  std::optional<MetricStats> gt_f1;
};

// A cell's metrics as k grows.
struct Curve {
  std::string explainer;
  Focus focus = Focus::kPhenomenon;
  MaskNature mask_nature = MaskNature::kHard;
  std::string strategy;
  std::vector<int> k;
  std::vector<double> fid_plus;
  std::vector<double> sufficiency;  // 1 - fid-
  std::vector<double> charact;
  std::optional<double> auc;  // needs two or more points
};

struct LeaderboardEntry {
  std::string explainer;
  int rank = 0;
  MetricStats charact;  // settings averaged within a seed, then across seeds
  double fid_plus = 0.0;
  double fid_minus = 0.0;
  double time_ms = 0.0;
  std::vector<std::string> typology;
};

struct Leaderboard {
  std::string strategy;
  int k = 0;
  std::vector<LeaderboardEntry> entries;  // by rank
};

struct AggregateOptions {
  double w_plus = 0.5;
  double w_minus = 0.5;
  TypologyThresholds typology;
  // Defaults to 10 when present, otherwise the smallest k recorded.
  std::optional<int> leaderboard_k;
};

struct Aggregate {
  std::vector<CellAggregate> cells;
  std::vector<Curve> curves;
  Leaderboard leaderboard;
};

// Throws std::invalid_argument on an empty record set.
Aggregate aggregate(std::span<const EvalRecord> records, const AggregateOptions& options = {});

enum class ExplanationType { kNecessary, kSufficient, kCharacterization };

ExplanationType parse_explanation_type(std::string_view text);
std::string_view to_string(ExplanationType type);

struct Recommendation {
  std::string explainer;
  int rank = 0;
  double score = 0.0;  // the ranking metric
  double fid_plus = 0.0;
  double fid_minus = 0.0;
  double charact = 0.0;
};

// Ranks explainers inside the requested cell at the leaderboard's strategy
// and k by fid+ (necessary), 1 - fid- (sufficient) or charact. Throws
// std::invalid_argument if the cell is absent.
std::vector<Recommendation> recommend(const Aggregate& aggregate, Focus focus,
                                      MaskNature mask_nature, ExplanationType type);

enum class ReportFormat { kCsv, kJson, kMarkdown };

ReportFormat parse_report_format(std::string_view text);

nlohmann::json aggregate_to_json(const Aggregate& aggregate);
std::string leaderboard_markdown(const Leaderboard& leaderboard);

// csv: summary.csv and leaderboard.csv; json: report.json; markdown:
// report.md. Returns the files written.
std::vector<std::filesystem::path> write_report(std::span<const EvalRecord> records,
                                                ReportFormat format,
                                                const std::filesystem::path& dir,
                                                const AggregateOptions& options = {});

}  // namespace gnnx

#endif  // GNNX_BENCH_HPP_
