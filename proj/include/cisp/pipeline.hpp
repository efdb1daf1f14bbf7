#pragma once

// The five-stage parametric pipeline: digital gain, white balance, color
// correction, gamma, tone mapping, followed by a final clamp to [0,1].
//
// Stage ops never clamp. Powers floor their argument at kPowFloor. Each stage
// op returns a new image; apply_pipeline fuses the stages but performs the
// exact same per-sample operations, so it matches the stage-by-stage
// composition bit for bit.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cisp/image.hpp"
#include "cisp/kernels.hpp"
#include "cisp/params.hpp"

namespace cisp {

ImageBuffer digital_gain(const ImageBuffer& img, double dg);
ImageBuffer white_balance(const ImageBuffer& img, double wb_r, double wb_b);
/// Requires each CCM row to sum to 1 within 1e-6 (kConstraintViolation).
ImageBuffer color_correct(const ImageBuffer& img, const IspParams::Matrix3& ccm,
                          const std::array<double, 3>& offset);
ImageBuffer gamma_correct(const ImageBuffer& img, double gamma);
ImageBuffer tone_map(const ImageBuffer& img, double s, double p1, double p2);
ImageBuffer clamp_unit(const ImageBuffer& img);

ImageBuffer apply_pipeline(const ImageBuffer& img, const IspParams& params);

/// Renders into `out`, reusing its storage when the shape matches.
void apply_pipeline_into(const ImageBuffer& img, const IspParams& params, ImageBuffer& out);

/// Renders interleaved RGB samples; src and dst hold the same number of
/// whole pixels and may not overlap.
void render_samples(std::span<const double> src, const IspParams& params, std::span<double> dst);

// Per-pixel operation count. Convention: every multiply, add and subtract in
// the closed-form stage definitions counts 1; a power x^p counts as
// exp(p * ln x), i.e. 3; max and clamp count 0.
namespace flops {
inline constexpr std::uint64_t kPow = 3;
inline constexpr std::uint64_t kGain = 3;
inline constexpr std::uint64_t kWhiteBalance = 2;
inline constexpr std::uint64_t kColorCorrect = 3 * (3 + 2 + 1);
inline constexpr std::uint64_t kGamma = 3 * kPow;
// s*a, (s-1), (s-1)*b, difference, plus two powers; per channel.
inline constexpr std::uint64_t kTone = 3 * (4 + 2 * kPow);
inline constexpr std::uint64_t kPerPixel = kGain + kWhiteBalance + kColorCorrect + kGamma + kTone;
}  // namespace flops

static_assert(flops::kPerPixel < 100);

std::uint64_t estimate_flops(std::size_t width, std::size_t height);

/// Uniform samples of the tone and gamma curves on [0,1], plus the response
/// of each output channel of the linear stages (gain, WB, CCM) to a gray
/// ramp.
struct CurveSamples {
  std::vector<double> x;
  std::vector<double> gamma;
  std::vector<double> tone;
  std::array<std::vector<double>, 3> ccm;
};

/// Throws kArgument when n < 2.
CurveSamples sample_curves(const IspParams& params, std::size_t n);

}  // namespace cisp
