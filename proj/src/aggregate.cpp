#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>

#include "csv.hpp"
#include "gnnx/bench.hpp"

namespace gnnx {

namespace {

MetricStats stats(const std::vector<double>& values) {
  MetricStats s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

using CellKey = std::tuple<std::string, Focus, MaskNature, std::string, int>;

// Node means of one seed within one cell.
struct SeedMeans {
  double fid_plus_acc = 0, fid_minus_acc = 0, fid_plus_prob = 0, fid_minus_prob = 0;
  double time_ms = 0, mask_size = 0, mask_entropy = 0, cc_ratio = 0;
  double gt_sum = 0;
  std::size_t gt_count = 0;
  std::size_t count = 0;
  double charact = 0;
};

}  // namespace

Aggregate aggregate(std::span<const EvalRecord> records, const AggregateOptions& options) {
  if (records.empty()) throw std::invalid_argument("cannot aggregate an empty record set");
  characterization(1.0, 0.0, options.w_plus, options.w_minus);  // validates the weights

  std::map<CellKey, std::map<std::uint64_t, SeedMeans>> groups;
  for (const auto& r : records) {
    auto& m = groups[{r.explainer, r.focus, r.mask_nature, r.strategy, r.k}][r.seed];
    m.fid_plus_acc += r.fid_plus_acc;
    m.fid_minus_acc += r.fid_minus_acc;
    m.fid_plus_prob += r.fid_plus_prob;
    m.fid_minus_prob += r.fid_minus_prob;
    m.time_ms += r.time_ms;
    m.mask_size += static_cast<double>(r.mask_size);
    m.mask_entropy += r.mask_entropy;
    m.cc_ratio += r.cc_ratio;
    if (r.gt_f1) {
      m.gt_sum += *r.gt_f1;
      ++m.gt_count;
    }
    ++m.count;
  }

  Aggregate out;
  for (auto& [key, seeds] : groups) {
    CellAggregate cell;
    std::tie(cell.explainer, cell.focus, cell.mask_nature, cell.strategy, cell.k) = key;
    cell.num_seeds = seeds.size();
    std::vector<double> fpa, fma, fpp, fmp, ch, time, size, ent, cc, gt;
    for (auto& [seed, m] : seeds) {
      const auto n = static_cast<double>(m.count);
      cell.num_records += m.count;
      m.fid_plus_acc /= n;
      m.fid_minus_acc /= n;
      m.charact = characterization(std::clamp(m.fid_plus_acc, 0.0, 1.0),
                                   std::clamp(m.fid_minus_acc, 0.0, 1.0), options.w_plus,
                                   options.w_minus);
      fpa.push_back(m.fid_plus_acc);
      fma.push_back(m.fid_minus_acc);
      fpp.push_back(m.fid_plus_prob / n);
      fmp.push_back(m.fid_minus_prob / n);
      ch.push_back(m.charact);
      time.push_back(m.time_ms / n);
      size.push_back(m.mask_size / n);
      ent.push_back(m.mask_entropy / n);
      cc.push_back(m.cc_ratio / n);
      if (m.gt_count > 0) gt.push_back(m.gt_sum / static_cast<double>(m.gt_count));
    }
    cell.fid_plus_acc = stats(fpa);
    cell.fid_minus_acc = stats(fma);
    cell.fid_plus_prob = stats(fpp);
    cell.fid_minus_prob = stats(fmp);
    cell.charact = stats(ch);
    cell.time_ms = stats(time);
    cell.mask_size = stats(size);
    cell.mask_entropy = stats(ent);
    cell.cc_ratio = stats(cc);
    if (!gt.empty()) cell.gt_f1 = stats(gt);
    out.cells.push_back(std::move(cell));
  }

  // Cells are ordered by key, so each curve's cells are contiguous and sorted by k.
  for (const auto& cell : out.cells) {
    if (out.curves.empty() || out.curves.back().explainer != cell.explainer ||
        out.curves.back().focus != cell.focus ||
        out.curves.back().mask_nature != cell.mask_nature ||
        out.curves.back().strategy != cell.strategy) {
      Curve curve;
      curve.explainer = cell.explainer;
      curve.focus = cell.focus;
      curve.mask_nature = cell.mask_nature;
      curve.strategy = cell.strategy;
      out.curves.push_back(std::move(curve));
    }
    auto& curve = out.curves.back();
    curve.k.push_back(cell.k);
    curve.fid_plus.push_back(cell.fid_plus_acc.mean);
    curve.sufficiency.push_back(1.0 - cell.fid_minus_acc.mean);
    curve.charact.push_back(cell.charact.mean);
  }
  for (auto& curve : out.curves) {
    if (curve.k.size() < 2) continue;
    std::vector<std::pair<double, double>> points;
    for (std::size_t i = 0; i < curve.k.size(); ++i) {
      points.emplace_back(curve.fid_plus[i], curve.sufficiency[i]);
    }
    curve.auc = fid_auc(points);
  }

  // Leaderboard at one (strategy, k).
  auto& board = out.leaderboard;
  board.strategy = out.cells.front().strategy;
  std::set<int> ks;
  for (const auto& cell : out.cells) {
    if (cell.strategy == board.strategy) ks.insert(cell.k);
  }
  if (options.leaderboard_k) {
    if (!ks.count(*options.leaderboard_k)) {
      throw std::invalid_argument("no records at k=" + std::to_string(*options.leaderboard_k));
    }
    board.k = *options.leaderboard_k;
  } else {
    board.k = ks.count(10) ? 10 : *ks.begin();
  }

  std::map<std::string, std::map<std::uint64_t, std::vector<double>>> per_seed;
  std::map<std::string, std::vector<const CellAggregate*>> board_cells;
  for (const auto& [key, seeds] : groups) {
    const auto& [explainer, focus, nature, strategy, k] = key;
    if (strategy != board.strategy || k != board.k) continue;
    for (const auto& [seed, m] : seeds) per_seed[explainer][seed].push_back(m.charact);
  }
  for (const auto& cell : out.cells) {
    if (cell.strategy == board.strategy && cell.k == board.k) {
      board_cells[cell.explainer].push_back(&cell);
    }
  }
  std::map<std::string, double> time_by_explainer;
  std::map<std::string, std::size_t> count_by_explainer;
  for (const auto& r : records) {
    time_by_explainer[r.explainer] += r.time_ms;
    ++count_by_explainer[r.explainer];
  }
  for (const auto& [explainer, seeds] : per_seed) {
    LeaderboardEntry entry;
    entry.explainer = explainer;
    std::vector<double> seed_means;
    for (const auto& [seed, values] : seeds) {
      double sum = 0.0;
      for (double v : values) sum += v;
      seed_means.push_back(sum / static_cast<double>(values.size()));
    }
    entry.charact = stats(seed_means);
    const auto& cells = board_cells.at(explainer);
    for (const auto* cell : cells) {
      entry.fid_plus += cell->fid_plus_acc.mean;
      entry.fid_minus += cell->fid_minus_acc.mean;
    }
    entry.fid_plus /= static_cast<double>(cells.size());
    entry.fid_minus /= static_cast<double>(cells.size());
    entry.time_ms =
        time_by_explainer.at(explainer) / static_cast<double>(count_by_explainer.at(explainer));
    entry.typology = typology(entry.fid_plus, entry.fid_minus, options.typology);
    board.entries.push_back(std::move(entry));
  }
  std::stable_sort(board.entries.begin(), board.entries.end(),
                   [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
                     return a.charact.mean > b.charact.mean;
                   });
  for (std::size_t i = 0; i < board.entries.size(); ++i) {
    board.entries[i].rank = static_cast<int>(i + 1);
  }
  return out;
}

ExplanationType parse_explanation_type(std::string_view text) {
  if (text == "necessary") return ExplanationType::kNecessary;
  if (text == "sufficient") return ExplanationType::kSufficient;
  if (text == "characterization") return ExplanationType::kCharacterization;
  throw std::invalid_argument("unknown explanation type '" + std::string(text) + "'");
}

std::string_view to_string(ExplanationType type) {
  switch (type) {
    case ExplanationType::kNecessary:
      return "necessary";
    case ExplanationType::kSufficient:
      return "sufficient";
    case ExplanationType::kCharacterization:
      return "characterization";
  }
  return {};
}

std::vector<Recommendation> recommend(const Aggregate& aggregate, Focus focus,
                                      MaskNature mask_nature, ExplanationType type) {
  const auto& board = aggregate.leaderboard;
  std::vector<Recommendation> out;
  for (const auto& cell : aggregate.cells) {
    if (cell.focus != focus || cell.mask_nature != mask_nature ||
        cell.strategy != board.strategy || cell.k != board.k) {
      continue;
    }
    Recommendation r;
    r.explainer = cell.explainer;
    r.fid_plus = cell.fid_plus_acc.mean;
    r.fid_minus = cell.fid_minus_acc.mean;
    r.charact = cell.charact.mean;
    switch (type) {
      case ExplanationType::kNecessary:
        r.score = r.fid_plus;
        break;
      case ExplanationType::kSufficient:
        r.score = 1.0 - r.fid_minus;
        break;
      case ExplanationType::kCharacterization:
        r.score = r.charact;
        break;
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) {
    throw std::invalid_argument("no results for focus " + std::string(to_string(focus)) +
                                " with " + std::string(to_string(mask_nature)) + " masks at " +
                                board.strategy + " k=" + std::to_string(board.k));
  }
  std::stable_sort(out.begin(), out.end(), [](const Recommendation& a, const Recommendation& b) {
    return a.score > b.score;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
  return out;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "json") return ReportFormat::kJson;
  if (text == "md" || text == "markdown") return ReportFormat::kMarkdown;
  throw std::invalid_argument("unknown report format '" + std::string(text) + "'");
}

namespace {

nlohmann::json to_json(const MetricStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

nlohmann::json aggregate_to_json(const Aggregate& aggregate) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : aggregate.cells) {
    nlohmann::json j = {{"explainer", c.explainer},
                        {"focus", to_string(c.focus)},
                        {"mask_nature", to_string(c.mask_nature)},
                        {"strategy", c.strategy},
                        {"k", c.k},
                        {"num_seeds", c.num_seeds},
                        {"num_records", c.num_records},
                        {"fid_plus_acc", to_json(c.fid_plus_acc)},
                        {"fid_minus_acc", to_json(c.fid_minus_acc)},
                        {"fid_plus_prob", to_json(c.fid_plus_prob)},
                        {"fid_minus_prob", to_json(c.fid_minus_prob)},
                        {"charact", to_json(c.charact)},
                        {"time_ms", to_json(c.time_ms)},
                        {"mask_size", to_json(c.mask_size)},
                        {"mask_entropy", to_json(c.mask_entropy)},
                        {"cc_ratio", to_json(c.cc_ratio)}};
    j["gt_f1"] = c.gt_f1 ? to_json(*c.gt_f1) : nlohmann::json(nullptr);
    cells.push_back(std::move(j));
  }
  nlohmann::json curves = nlohmann::json::array();
  for (const auto& c : aggregate.curves) {
    curves.push_back({{"explainer", c.explainer},
                      {"focus", to_string(c.focus)},
                      {"mask_nature", to_string(c.mask_nature)},
                      {"strategy", c.strategy},
                      {"k", c.k},
                      {"fid_plus", c.fid_plus},
                      {"one_minus_fid_minus", c.sufficiency},
                      {"charact", c.charact},
                      {"auc", c.auc ? nlohmann::json(*c.auc) : nlohmann::json(nullptr)}});
  }
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : aggregate.leaderboard.entries) {
    entries.push_back({{"explainer", e.explainer},
                       {"rank", e.rank},
                       {"charact", to_json(e.charact)},
                       {"fid_plus", e.fid_plus},
                       {"fid_minus", e.fid_minus},
                       {"time_ms", e.time_ms},
                       {"typology", e.typology}});
  }
  return {{"cells", cells},
          {"curves", curves},
          {"leaderboard",
           {{"strategy", aggregate.leaderboard.strategy},
            {"k", aggregate.leaderboard.k},
            {"entries", entries}}}};
}

std::string leaderboard_markdown(const Leaderboard& board) {
  auto fixed = [](double v, int digits) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
  };
  std::string md = "# Leaderboard (" + board.strategy + ", k=" + std::to_string(board.k) + ")\n\n";
  md += "| rank | explainer | charact | fid+ | fid- | time (ms) | type |\n";
  md += "|---:|---|---:|---:|---:|---:|---|\n";
  for (const auto& e : board.entries) {
    std::string tags;
    for (const auto& t : e.typology) tags += (tags.empty() ? "" : ", ") + t;
    md += "| " + std::to_string(e.rank) + " | " + e.explainer + " | " +
          fixed(e.charact.mean, 3) + " ± " + fixed(e.charact.std, 3) + " | " +
          fixed(e.fid_plus, 3) + " | " + fixed(e.fid_minus, 3) + " | " + fixed(e.time_ms, 2) +
          " | " + tags + " |\n";
  }
  return md;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

constexpr std::string_view kSummaryHeader =
    "explainer,focus,mask_nature,strategy,k,num_seeds,num_records,fid_plus_acc,fid_plus_acc_std,"
    "fid_minus_acc,fid_minus_acc_std,fid_plus_prob,fid_minus_prob,charact,charact_std,gt_f1,"
    "time_ms,mask_size,mask_entropy,cc_ratio";
constexpr std::string_view kLeaderboardHeader =
    "rank,explainer,strategy,k,charact,charact_std,fid_plus,fid_minus,time_ms,typology";

}  // namespace

std::vector<std::filesystem::path> write_report(std::span<const EvalRecord> records,
                                                ReportFormat format,
                                                const std::filesystem::path& dir,
                                                const AggregateOptions& options) {
  std::filesystem::create_directories(dir);
  std::optional<Aggregate> agg;
  if (!records.empty()) agg = aggregate(records, options);
  using csv::format_double;

  switch (format) {
    case ReportFormat::kCsv: {
      std::string summary(kSummaryHeader);
      summary += '\n';
      std::string board(kLeaderboardHeader);
      board += '\n';
      if (agg) {
        for (const auto& c : agg->cells) {
          summary += c.explainer + ',' + std::string(to_string(c.focus)) + ',' +
                     std::string(to_string(c.mask_nature)) + ',' + c.strategy + ',' +
                     std::to_string(c.k) + ',' + std::to_string(c.num_seeds) + ',' +
                     std::to_string(c.num_records) + ',' + format_double(c.fid_plus_acc.mean) +
                     ',' + format_double(c.fid_plus_acc.std) + ',' +
                     format_double(c.fid_minus_acc.mean) + ',' +
                     format_double(c.fid_minus_acc.std) + ',' +
                     format_double(c.fid_plus_prob.mean) + ',' +
                     format_double(c.fid_minus_prob.mean) + ',' + format_double(c.charact.mean) +
                     ',' + format_double(c.charact.std) + ',' +
                     (c.gt_f1 ? format_double(c.gt_f1->mean) : "") + ',' +
                     format_double(c.time_ms.mean) + ',' + format_double(c.mask_size.mean) + ',' +
                     format_double(c.mask_entropy.mean) + ',' + format_double(c.cc_ratio.mean) +
                     '\n';
        }
        for (const auto& e : agg->leaderboard.entries) {
          std::string tags;
          for (const auto& t : e.typology) tags += (tags.empty() ? "" : ";") + t;
          board += std::to_string(e.rank) + ',' + e.explainer + ',' + agg->leaderboard.strategy +
                   ',' + std::to_string(agg->leaderboard.k) + ',' +
                   format_double(e.charact.mean) + ',' + format_double(e.charact.std) + ',' +
                   format_double(e.fid_plus) + ',' + format_double(e.fid_minus) + ',' +
                   format_double(e.time_ms) + ',' + tags + '\n';
        }
      }
      write_file(dir / "summary.csv", summary);
      write_file(dir / "leaderboard.csv", board);
      return {dir / "summary.csv", dir / "leaderboard.csv"};
    }
    case ReportFormat::kJson: {
      const nlohmann::json j = agg ? aggregate_to_json(*agg) : nlohmann::json::object();
      write_file(dir / "report.json", j.dump(2) + "\n");
      return {dir / "report.json"};
    }
    case ReportFormat::kMarkdown: {
      write_file(dir / "report.md", agg ? leaderboard_markdown(agg->leaderboard)
                                        : std::string("# Leaderboard\n\nNo records.\n"));
      return {dir / "report.md"};
    }
  }
  return {};
}

}  // namespace gnnx
