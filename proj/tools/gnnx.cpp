#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gnnx/bench.hpp"
#include "gnnx/bundle.hpp"
#include "gnnx/gcn.hpp"
#include "gnnx/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

gnnx::SyntheticSpec resolve_spec(const std::string& spec, std::uint64_t seed, bool seed_given) {
  if (fs::is_regular_file(spec)) {
    auto s = gnnx::spec_from_json(read_json(spec));
    if (seed_given) s.seed = seed;
    return s;
  }
  return gnnx::named_spec(spec, seed);
}

// Weights and typology thresholds stored with a run, when present.
gnnx::AggregateOptions aggregate_options(const fs::path& records_dir) {
  gnnx::AggregateOptions options;
  const auto path = records_dir / "config.json";
  if (!fs::exists(path)) return options;
  const auto config = gnnx::ExperimentConfig::FromJson(read_json(path));
  options.w_plus = config.w_plus;
  options.w_minus = config.w_minus;
  options.typology = config.typology;
  return options;
}

void print_report(const gnnx::ModelReport& r) {
  std::printf("best epoch %d  test accuracy %.4f  f1 %.4f  precision %.4f  recall %.4f\n",
              r.best_epoch, r.accuracy, r.f1_macro, r.precision_macro, r.recall_macro);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GNN explainer benchmark"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand("generate", "Generate a synthetic graph bundle");
  std::string spec;
  fs::path data_out;
  std::uint64_t data_seed = 0;
  generate->add_option("--spec", spec, "Dataset name or spec JSON file")->required();
  generate->add_option("--out", data_out, "Output bundle directory")->required();
  auto* seed_opt = generate->add_option("--seed", data_seed, "Generator seed");

  auto* train = app.add_subcommand("train", "Train a GCN on a bundle");
  fs::path train_data, recipe_path, ckpt_out;
  train->add_option("--data", train_data, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--recipe", recipe_path, "Recipe JSON file")->check(CLI::ExistingFile);
  train->add_option("--out", ckpt_out, "Checkpoint path")->required();

  auto* explain = app.add_subcommand("explain", "Run the explainer sweep");
  fs::path explain_data, model_path, config_path, run_out;
  explain->add_option("--data", explain_data, "Bundle directory or dataset name")->required();
  explain->add_option("--model", model_path, "Checkpoint; trained from the recipe if omitted");
  explain->add_option("--config", config_path, "Experiment config JSON")->check(CLI::ExistingFile);
  explain->add_option("--out", run_out, "Run directory")->required();
  int workers = -1;
  explain->add_option("--workers", workers, "Worker threads (0 = all cores)");

  auto* report = app.add_subcommand("report", "Aggregate a run's records");
  fs::path report_dir, report_out;
  std::string format = "md";
  report->add_option("--records", report_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--format", format, "csv, json or md")
      ->check(CLI::IsMember({"csv", "json", "md", "markdown"}));
  report->add_option("--out", report_out, "Output directory (defaults to the run directory)");

  auto* recommend = app.add_subcommand("recommend", "Rank explainers for a need");
  fs::path rec_dir;
  std::string focus = "phenomenon", mask = "soft", type = "characterization";
  int rec_k = 0;
  recommend->add_option("--records", rec_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  recommend->add_option("--focus", focus, "phenomenon or model");
  recommend->add_option("--mask", mask, "hard or soft");
  recommend->add_option("--type", type, "necessary, sufficient or characterization");
  recommend->add_option("--k", rec_k, "Explanation size (default 10)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      const auto s = resolve_spec(spec, data_seed, seed_opt->count() > 0);
      const auto data = gnnx::generate(s);
      gnnx::write_synthetic_bundle(data, data_out);
      std::printf("%s: %d nodes, %zu edges -> %s\n", s.name.c_str(), data.graph.num_nodes(),
                  data.graph.num_edges(), data_out.string().c_str());
    } else if (*train) {
      const auto g = gnnx::read_bundle(train_data);
      const auto recipe = recipe_path.empty() ? gnnx::TrainRecipe{}
                                              : gnnx::TrainRecipe::FromJson(read_json(recipe_path));
      const auto result = gnnx::train(g, recipe.ShapeFor(g), recipe.train);
      gnnx::save_checkpoint(result.model, ckpt_out);
      print_report(result.report);
    } else if (*explain) {
      auto config = config_path.empty() ? gnnx::ExperimentConfig{}
                                        : gnnx::ExperimentConfig::FromJson(read_json(config_path));
      config.dataset = explain_data.string();
      config.model = model_path.empty() ? std::string() : fs::absolute(model_path).string();
      if (workers >= 0) config.workers = workers;
      gnnx::RunOptions options;
      options.out_dir = run_out;
      options.log = [](const std::string& line) { std::cerr << line << '\n'; };
      const auto summary = gnnx::run(config, options);
      for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';
      std::printf("%zu units (%zu resumed, %zu evaluated), %zu records, %zu skipped\n",
                  summary.units_total, summary.units_resumed, summary.units_evaluated,
                  summary.records, summary.skipped);
    } else if (*report) {
      const auto records = gnnx::read_records(report_dir / "records.csv");
      const auto files =
          gnnx::write_report(records, gnnx::parse_report_format(format),
                             report_out.empty() ? report_dir : report_out,
                             aggregate_options(report_dir));
      for (const auto& f : files) std::printf("%s\n", f.string().c_str());
    } else if (*recommend) {
      const auto records = gnnx::read_records(rec_dir / "records.csv");
      auto options = aggregate_options(rec_dir);
      if (rec_k > 0) options.leaderboard_k = rec_k;
      const auto agg = gnnx::aggregate(records, options);
      const auto ranked =
          gnnx::recommend(agg, gnnx::parse_focus(focus), gnnx::parse_mask_nature(mask),
                          gnnx::parse_explanation_type(type));
      std::printf("%s, k=%d, %s focus, %s masks, ranked by %s\n",
                  agg.leaderboard.strategy.c_str(), agg.leaderboard.k, focus.c_str(),
                  mask.c_str(), type.c_str());
      std::printf("%-4s %-22s %8s %8s %8s %8s\n", "rank", "explainer", "score", "fid+", "fid-",
                  "charact");
      for (const auto& r : ranked) {
        std::printf("%-4d %-22s %8.4f %8.4f %8.4f %8.4f\n", r.rank, r.explainer.c_str(), r.score,
                    r.fid_plus, r.fid_minus, r.charact);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
