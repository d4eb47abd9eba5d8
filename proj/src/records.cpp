#include <fstream>
#include <stdexcept>
#include <string>
#include <tuple>

#include "csv.hpp"
#include "gnnx/bench.hpp"

namespace gnnx {

namespace {

constexpr std::string_view kHeader =
    "dataset,explainer,seed,focus,mask_nature,strategy,k,node,fid_plus_acc,fid_minus_acc,"
    "fid_plus_prob,fid_minus_prob,charact,gt_f1,time_ms,mask_size,mask_entropy,mask_max,"
    "cc_ratio";
constexpr std::size_t kColumns = 19;

auto key_of(const EvalRecord& r) {
  return std::tie(r.dataset, r.explainer, r.seed, r.focus, r.mask_nature, r.strategy, r.k,
                  r.node);
}

}  // namespace

bool record_key_less(const EvalRecord& a, const EvalRecord& b) { return key_of(a) < key_of(b); }

std::string_view records_header() { return kHeader; }

std::string format_record(const EvalRecord& r) {
  using csv::format_double;
  std::string line;
  line.reserve(200);
  line += r.dataset + ',' + r.explainer + ',' + std::to_string(r.seed) + ',';
  line += std::string(to_string(r.focus)) + ',' + std::string(to_string(r.mask_nature)) + ',';
  line += r.strategy + ',' + std::to_string(r.k) + ',' + std::to_string(r.node) + ',';
  line += format_double(r.fid_plus_acc) + ',' + format_double(r.fid_minus_acc) + ',';
  line += format_double(r.fid_plus_prob) + ',' + format_double(r.fid_minus_prob) + ',';
  line += format_double(r.charact) + ',';
  if (r.gt_f1) line += format_double(*r.gt_f1);
  line += ',' + format_double(r.time_ms) + ',' + std::to_string(r.mask_size) + ',';
  line += format_double(r.mask_entropy) + ',' + format_double(r.mask_max) + ',';
  line += format_double(r.cc_ratio);
  return line;
}

EvalRecord parse_record(std::string_view line) {
  const auto f = csv::split(line);
  if (f.size() != kColumns) {
    throw std::runtime_error("record has " + std::to_string(f.size()) + " fields, expected " +
                             std::to_string(kColumns));
  }
  using csv::parse_number;
  EvalRecord r;
  r.dataset = f[0];
  r.explainer = f[1];
  r.seed = parse_number<std::uint64_t>(f[2], "seed");
  try {
    r.focus = parse_focus(f[3]);
    r.mask_nature = parse_mask_nature(f[4]);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(e.what());
  }
  r.strategy = f[5];
  r.k = parse_number<int>(f[6], "k");
  r.node = parse_number<NodeId>(f[7], "node");
  r.fid_plus_acc = parse_number<double>(f[8], "fid_plus_acc");
  r.fid_minus_acc = parse_number<double>(f[9], "fid_minus_acc");
  r.fid_plus_prob = parse_number<double>(f[10], "fid_plus_prob");
  r.fid_minus_prob = parse_number<double>(f[11], "fid_minus_prob");
  r.charact = parse_number<double>(f[12], "charact");
  if (!f[13].empty()) r.gt_f1 = parse_number<double>(f[13], "gt_f1");
  r.time_ms = parse_number<double>(f[14], "time_ms");
  r.mask_size = parse_number<std::size_t>(f[15], "mask_size");
  r.mask_entropy = parse_number<double>(f[16], "mask_entropy");
  r.mask_max = parse_number<double>(f[17], "mask_max");
  r.cc_ratio = parse_number<double>(f[18], "cc_ratio");
  return r;
}

void write_records(const std::filesystem::path& path, std::span<const EvalRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kHeader << '\n';
  for (const auto& r : records) out << format_record(r) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<EvalRecord> read_records(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty() || lines[0] != kHeader) {
    throw std::runtime_error(path.string() + ": missing or unexpected records header");
  }
  std::vector<EvalRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      records.push_back(parse_record(lines[i]));
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return records;
}

std::vector<SkipRecord> read_skips(const std::filesystem::path& path) {
  std::vector<SkipRecord> skips;
  if (!std::filesystem::exists(path)) return skips;
  const auto lines = csv::read_lines(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv::split(lines[i]);
    if (f.size() < 5) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": malformed skip");
    }
    SkipRecord s;
    s.dataset = f[0];
    s.explainer = f[1];
    s.seed = csv::parse_number<std::uint64_t>(f[2], "seed");
    s.node = csv::parse_number<NodeId>(f[3], "node");
    const std::string_view line = lines[i];
    std::size_t start = 0;
    for (int comma = 0; comma < 4; ++comma) start = line.find(',', start) + 1;
    s.reason = line.substr(start);
    skips.push_back(std::move(s));
  }
  return skips;
}

}  // namespace gnnx
