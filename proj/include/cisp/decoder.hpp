#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cisp/params.hpp"

namespace cisp {

/// Control coordinates fed to the decoder. Negative entries are allowed
/// (the greedy search can step below zero) and reported by has_negative().
class TaskVector {
 public:
  TaskVector() = default;
  explicit TaskVector(std::vector<double> values);
  static TaskVector zeros(std::size_t dim) { return TaskVector(std::vector<double>(dim, 0.0)); }

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool has_negative() const noexcept;
  std::string to_string() const;  // "a,b,c", round-trip precision
  /// Parses "a,b,c"; throws kArgument on malformed or non-finite input.
  static TaskVector parse(const std::string& text);

  bool operator==(const TaskVector&) const = default;

 private:
  std::vector<double> values_;
};

/// Bias-free dense layer; weights row-major with shape (out, in).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;

  bool operator==(const DenseLayer&) const = default;
};

/// Five dense layers D->64->64->64->64->19, rectifier on the first four,
/// linear output. Immutable once constructed.
class DecoderWeights {
 public:
  static constexpr std::size_t kHidden = 64;
  static constexpr std::size_t kLayers = 5;

  /// Validates shapes (kShape) and finiteness (kWeights).
  explicit DecoderWeights(std::vector<DenseLayer> layers);
  static DecoderWeights zeros(std::size_t task_dim);

  std::size_t task_dim() const noexcept { return layers_.front().in; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  /// Returns a copy with the output layer scaled by `factor`.
  DecoderWeights with_output_scaled(double factor) const;

  bool operator==(const DecoderWeights&) const = default;

 private:
  std::vector<DenseLayer> layers_;
};

/// Raw network output (the residual to the initial parameters), flat order.
IspParams::Vector decode_residual(const TaskVector& t, const DecoderWeights& w);

/// default_params() + residual, then CCM rows normalized. A zero task vector
/// yields default_params() exactly.
IspParams decode(const TaskVector& t, const DecoderWeights& w);

std::size_t count_params(const DecoderWeights& w) noexcept;
/// Closed form for the fixed architecture.
constexpr std::size_t count_params_for(std::size_t task_dim) noexcept {
  return task_dim * 64 + 3 * 64 * 64 + 64 * IspParams::kCount;
}

/// Deterministic pseudo-random weights.
///
/// Generator: std::mt19937_64 seeded with `seed`; each raw 64-bit draw u is
/// mapped to (u >> 11) * 2^-53 in [0,1) and then to [-b, b) with
/// b = sqrt(6 / fan_in). Layers are filled in order, row-major. Output rows
/// are then rescaled so that the largest |residual| over a fixed probe set in
/// [0,10]^D matches a per-parameter span that keeps decoded parameters within
/// typical retouching ranges. Finally the output layer is multiplied by
/// `scale`. Throws kArgument for negative or non-finite scale.
DecoderWeights synth_weights(std::uint64_t seed, double scale, std::size_t task_dim = 3);

/// Per-parameter span used by synth_weights, flat order.
const IspParams::Vector& synth_residual_spans() noexcept;

// Document: {"format_version":1, "activation":"relu",
//            "dims":[D,64,64,64,64,19], "layers":[[...], ...]}
nlohmann::json weights_to_json(const DecoderWeights& w);
/// kParse for malformed documents, kShape for shape mismatches, kWeights for
/// non-finite (or null) entries.
DecoderWeights weights_from_json(const nlohmann::json& doc);
DecoderWeights load_weights(const std::string& path);
void save_weights(const DecoderWeights& w, const std::string& path);

}  // namespace cisp
