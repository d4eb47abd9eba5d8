#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "gnnx/gcn.hpp"

namespace gnnx {

namespace {

constexpr std::array<char, 4> kMagic{'G', 'N', 'N', 'X'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t value) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(std::string bytes, std::string source)
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  std::string_view Take(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw std::runtime_error(source_ + ": checkpoint is truncated");
    }
    std::string_view view(bytes_.data() + pos_, n);
    pos_ += n;
    return view;
  }

  std::uint32_t U32() {
    const auto raw = Take(4);
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) {
      value |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[i])) << (8 * i);
    }
    return value;
  }

  double F64() {
    const auto raw = Take(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i])) << (8 * i);
    }
    return std::bit_cast<double>(bits);
  }

  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const GcnModel& model, const std::filesystem::path& path) {
  const nlohmann::json meta = {{"layer_dims", model.dims()},
                               {"dropout", model.dropout()},
                               {"num_classes", model.num_classes()},
                               {"bias", true},
                               {"readout", model.has_readout()}};
  const std::string meta_text = meta.dump();

  std::string out(kMagic.begin(), kMagic.end());
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(meta_text.size()));
  out += meta_text;
  auto put_layer = [&out](const GcnLayer& layer) {
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) put_f64(out, layer.weight.data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) put_f64(out, layer.bias(i));
  };
  for (const auto& layer : model.layers()) put_layer(layer);
  if (model.has_readout()) put_layer(*model.readout());

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write checkpoint " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("failed writing checkpoint " + path.string());
}

GcnModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open checkpoint " + path.string());
  Reader in(std::string(std::istreambuf_iterator<char>(file), {}), path.string());

  if (in.Take(4) != std::string_view(kMagic.data(), kMagic.size())) {
    throw std::runtime_error(path.string() + ": not a GNNX checkpoint");
  }
  const std::uint32_t version = in.U32();
  if (version != kVersion) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version " +
                             std::to_string(version));
  }
  const std::uint32_t meta_size = in.U32();
  std::vector<int> dims;
  bool has_readout = false;
  int num_classes = 0;
  double dropout = 0.0;
  try {
    const auto meta = nlohmann::json::parse(in.Take(meta_size));
    dims = meta.at("layer_dims").get<std::vector<int>>();
    has_readout = meta.value("readout", false);
    if (has_readout) num_classes = meta.at("num_classes").get<int>();
    dropout = meta.at("dropout").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": corrupt metadata: " + e.what());
  }
  if (dims.size() < 2) throw std::runtime_error(path.string() + ": corrupt layer dims");

  for (int d : dims) {
    if (d < 1) throw std::runtime_error(path.string() + ": corrupt layer dims");
  }
  auto read_layer = [&in](int rows, int cols) {
    GcnLayer layer{Matrix(rows, cols), RowVector(cols)};
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = in.F64();
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = in.F64();
    return layer;
  };
  std::vector<GcnLayer> layers;
  int concat_width = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    layers.push_back(read_layer(dims[l], dims[l + 1]));
    concat_width += dims[l + 1];
  }
  std::optional<GcnLayer> readout;
  if (has_readout) {
    if (num_classes < 1) throw std::runtime_error(path.string() + ": corrupt class count");
    readout = read_layer(concat_width, num_classes);
  }
  if (!in.AtEnd()) throw std::runtime_error(path.string() + ": trailing bytes in checkpoint");
  try {
    return GcnModel(std::move(layers), dropout, std::move(readout));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

GcnModel load_checkpoint(const std::filesystem::path& path,
                         const std::vector<int>& expected_dims) {
  GcnModel model = load_checkpoint(path);
  if (model.dims() != expected_dims) {
    auto show = [](const std::vector<int>& d) {
      std::string s;
      for (int x : d) s += (s.empty() ? "" : "x") + std::to_string(x);
      return s;
    };
    throw std::runtime_error(path.string() + ": checkpoint shape " + show(model.dims()) +
                             " does not match expected " + show(expected_dims));
  }
  return model;
}

}  // namespace gnnx
