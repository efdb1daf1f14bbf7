#include "cisp/decoder.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "cisp/error.hpp"

namespace cisp {

// ---------------------------------------------------------------------------
// TaskVector

TaskVector::TaskVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(Errc::kArgument, "task vector entries must be finite");
  }
}

bool TaskVector::has_negative() const noexcept {
  for (double v : values_)
    if (v < 0.0) return true;
  return false;
}

std::string TaskVector::to_string() const {
  std::string out;
  char buf[32];
  for (double v : values_) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (!out.empty()) out += ',';
    out += buf;
  }
  return out;
}

TaskVector TaskVector::parse(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw Error(Errc::kArgument, "bad task vector entry '" + item + "'");
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size()) throw Error(Errc::kArgument, "bad task vector entry '" + item + "'");
    values.push_back(v);
  }
  if (values.empty()) throw Error(Errc::kArgument, "empty task vector");
  return TaskVector(std::move(values));
}

// ---------------------------------------------------------------------------
// DecoderWeights

DecoderWeights::DecoderWeights(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.size() != kLayers) {
    throw Error(Errc::kShape, "decoder needs exactly 5 layers, got " +
                                  std::to_string(layers_.size()));
  }
  if (layers_.front().in < 1) throw Error(Errc::kShape, "task dimension must be >= 1");
  for (std::size_t l = 0; l < kLayers; ++l) {
    const auto& layer = layers_[l];
    const std::size_t want_out = l + 1 == kLayers ? IspParams::kCount : kHidden;
    if (layer.out != want_out || (l > 0 && layer.in != kHidden)) {
      throw Error(Errc::kShape, "layer " + std::to_string(l) + " has shape " +
                                    std::to_string(layer.in) + "->" + std::to_string(layer.out));
    }
    if (layer.w.size() != layer.in * layer.out) {
      throw Error(Errc::kShape, "layer " + std::to_string(l) + " holds " +
                                    std::to_string(layer.w.size()) + " weights");
    }
    for (double v : layer.w) {
      if (!std::isfinite(v)) {
        throw Error(Errc::kWeights, "layer " + std::to_string(l) + " has a non-finite weight");
      }
    }
  }
}

DecoderWeights DecoderWeights::zeros(std::size_t task_dim) {
  std::vector<DenseLayer> layers;
  std::size_t in = task_dim;
  for (std::size_t l = 0; l < kLayers; ++l) {
    const std::size_t out = l + 1 == kLayers ? IspParams::kCount : kHidden;
    layers.push_back({in, out, std::vector<double>(in * out, 0.0)});
    in = out;
  }
  return DecoderWeights(std::move(layers));
}

DecoderWeights DecoderWeights::with_output_scaled(double factor) const {
  auto layers = layers_;
  for (double& v : layers.back().w) v *= factor;
  return DecoderWeights(std::move(layers));
}

namespace {

void dense_forward(const DenseLayer& layer, std::span<const double> in, std::span<double> out,
                   bool rectify) {
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double* row = layer.w.data() + o * layer.in;
    double acc = 0.0;
    for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * in[i];
    out[o] = rectify ? (acc > 0.0 ? acc : 0.0) : acc;
  }
}

}  // namespace

IspParams::Vector decode_residual(const TaskVector& t, const DecoderWeights& w) {
  if (t.dim() != w.task_dim()) {
    throw Error(Errc::kShape, "task vector has dimension " + std::to_string(t.dim()) +
                                  ", decoder expects " + std::to_string(w.task_dim()));
  }
  std::vector<double> a(t.values().begin(), t.values().end());
  std::vector<double> b(DecoderWeights::kHidden);
  const auto& layers = w.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    b.assign(layers[l].out, 0.0);
    dense_forward(layers[l], a, b, /*rectify=*/true);
    std::swap(a, b);
  }
  IspParams::Vector residual{};
  dense_forward(layers.back(), a, residual, /*rectify=*/false);
  return residual;
}

IspParams decode(const TaskVector& t, const DecoderWeights& w) {
  const auto residual = decode_residual(t, w);
  auto v = default_params().to_vector();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += residual[i];
  return normalize_ccm_rows(IspParams::from_vector(v));
}

std::size_t count_params(const DecoderWeights& w) noexcept {
  std::size_t n = 0;
  for (const auto& layer : w.layers()) n += layer.w.size();
  return n;
}

// ---------------------------------------------------------------------------
// Synthetic weights

const IspParams::Vector& synth_residual_spans() noexcept {
  static const IspParams::Vector spans{
      0.35,                                             // dg
      0.2,  0.3,                                        // wb_r, wb_b
      0.1,  0.1,  0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1,    // ccm
      0.04, 0.04, 0.04,                                 // offsets
      0.12,                                             // gamma
      1.0,  0.5,  0.6};                                 // tone s, p1, p2
  return spans;
}

namespace {

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<TaskVector> probe_set(std::uint64_t seed, std::size_t dim) {
  std::vector<TaskVector> probes;
  if (dim <= 10) {
    for (std::size_t mask = 1; mask < (std::size_t{1} << dim); ++mask) {
      std::vector<double> v(dim);
      for (std::size_t d = 0; d < dim; ++d) v[d] = (mask >> d) & 1 ? 10.0 : 0.0;
      probes.emplace_back(std::move(v));
    }
  }
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  for (int n = 0; n < 256; ++n) {
    std::vector<double> v(dim);
    for (double& x : v) x = 10.0 * unit_draw(rng);
    probes.emplace_back(std::move(v));
  }
  return probes;
}

}  // namespace

DecoderWeights synth_weights(std::uint64_t seed, double scale, std::size_t task_dim) {
  if (!std::isfinite(scale) || scale < 0.0) {
    throw Error(Errc::kArgument, "synth_weights: scale must be finite and >= 0");
  }
  if (task_dim < 1) throw Error(Errc::kArgument, "synth_weights: task_dim must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  std::size_t in = task_dim;
  for (std::size_t l = 0; l < DecoderWeights::kLayers; ++l) {
    const std::size_t out = l + 1 == DecoderWeights::kLayers ? IspParams::kCount
                                                             : DecoderWeights::kHidden;
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    DenseLayer layer{in, out, std::vector<double>(in * out)};
    for (double& v : layer.w) v = (2.0 * unit_draw(rng) - 1.0) * bound;
    layers.push_back(std::move(layer));
    in = out;
  }

  DecoderWeights raw(layers);
  IspParams::Vector peak{};
  for (const auto& t : probe_set(seed, task_dim)) {
    const auto r = decode_residual(t, raw);
    for (std::size_t i = 0; i < r.size(); ++i) peak[i] = std::max(peak[i], std::fabs(r[i]));
  }
  const auto& spans = synth_residual_spans();
  auto& out_w = layers.back().w;
  for (std::size_t o = 0; o < IspParams::kCount; ++o) {
    const double gain = peak[o] > 0.0 ? spans[o] / peak[o] : 0.0;
    for (std::size_t i = 0; i < DecoderWeights::kHidden; ++i) {
      out_w[o * DecoderWeights::kHidden + i] *= gain * scale;
    }
  }
  return DecoderWeights(std::move(layers));
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json weights_to_json(const DecoderWeights& w) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["activation"] = "relu";
  auto dims = nlohmann::json::array();
  dims.push_back(w.task_dim());
  for (const auto& layer : w.layers()) dims.push_back(layer.out);
  doc["dims"] = dims;
  auto layers = nlohmann::json::array();
  for (const auto& layer : w.layers()) layers.push_back(layer.w);
  doc["layers"] = layers;
  return doc;
}

DecoderWeights weights_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(Errc::kParse, "weights document must be an object");
  if (!doc.contains("format_version") || doc["format_version"] != 1) {
    throw Error(Errc::kParse, "weights document: format_version must be 1");
  }
  if (!doc.contains("activation") || doc["activation"] != "relu") {
    throw Error(Errc::kParse, "weights document: activation must be \"relu\"");
  }
  if (!doc.contains("dims") || !doc["dims"].is_array() || !doc.contains("layers") ||
      !doc["layers"].is_array()) {
    throw Error(Errc::kParse, "weights document: dims and layers must be arrays");
  }
  std::vector<std::size_t> dims;
  for (const auto& d : doc["dims"]) {
    if (!d.is_number_unsigned()) throw Error(Errc::kParse, "weights document: bad dims entry");
    dims.push_back(d.get<std::size_t>());
  }
  const auto& jl = doc["layers"];
  if (dims.size() != DecoderWeights::kLayers + 1 || jl.size() != DecoderWeights::kLayers) {
    throw Error(Errc::kShape, "weights document: expected 5 layers and 6 dims, got " +
                                  std::to_string(jl.size()) + " layers and " +
                                  std::to_string(dims.size()) + " dims");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < jl.size(); ++l) {
    if (!jl[l].is_array()) throw Error(Errc::kParse, "weights document: layer is not an array");
    DenseLayer layer{dims[l], dims[l + 1], {}};
    layer.w.reserve(jl[l].size());
    for (const auto& v : jl[l]) {
      if (v.is_null()) {
        throw Error(Errc::kWeights, "layer " + std::to_string(l) + " has a non-finite weight");
      }
      if (!v.is_number()) throw Error(Errc::kParse, "weights document: non-numeric weight");
      layer.w.push_back(v.get<double>());
    }
    layers.push_back(std::move(layer));
  }
  return DecoderWeights(std::move(layers));
}

DecoderWeights load_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kFileNotFound, "cannot open weights file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, "weights file " + path + ": " + e.what());
  }
  return weights_from_json(doc);
}

void save_weights(const DecoderWeights& w, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::kIo, "cannot write weights file " + path);
  out << weights_to_json(w).dump() << '\n';
  if (!out) throw Error(Errc::kIo, "short write to " + path);
}

}  // namespace cisp
