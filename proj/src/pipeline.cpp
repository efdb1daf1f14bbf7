#include "cisp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cisp/error.hpp"

namespace cisp {
namespace {

// Pixels per fused block.
constexpr std::size_t kBlockPixels = 2048;

void require_positive(double v, const char* name) {
  if (!std::isfinite(v) || !(v > 0.0)) {
    throw Error(Errc::kParameterDomain, std::string(name) + " must be finite and > 0");
  }
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw Error(Errc::kParameterDomain, std::string(name) + " must be finite");
}

void require_ccm(const IspParams::Matrix3& ccm, const std::array<double, 3>& offset) {
  for (std::size_t r = 0; r < 3; ++r) {
    for (double v : ccm[r]) require_finite(v, "ccm");
    require_finite(offset[r], "offset");
    const double sum = ccm[r][0] + ccm[r][1] + ccm[r][2];
    if (!(std::fabs(sum - 1.0) <= kCcmRowTolerance)) {
      throw Error(Errc::kConstraintViolation,
                  "CCM row " + std::to_string(r + 1) + " sums to " + std::to_string(sum) +
                      "; normalize rows first");
    }
  }
}

// The linear stages share these helpers so the fused path and the stage ops
// round identically.
inline void gain_px(double* px, double dg) {
  px[0] = px[0] * dg;
  px[1] = px[1] * dg;
  px[2] = px[2] * dg;
}

inline void wb_px(double* px, double wb_r, double wb_b) {
  px[0] = px[0] * wb_r;
  px[2] = px[2] * wb_b;
}

inline void ccm_px(double* px, const IspParams::Matrix3& m, const std::array<double, 3>& o) {
  const double r = px[0], g = px[1], b = px[2];
  px[0] = m[0][0] * r + m[0][1] * g + m[0][2] * b + o[0];
  px[1] = m[1][0] * r + m[1][1] * g + m[1][2] * b + o[1];
  px[2] = m[2][0] * r + m[2][1] * g + m[2][2] * b + o[2];
}

void validate_full(const IspParams& p) {
  validate_params(p);
  require_finite(p.tone_s, "tone_s");
  require_ccm(p.ccm, p.offset);
}

}  // namespace

ImageBuffer digital_gain(const ImageBuffer& img, double dg) {
  require_positive(dg, "dg");
  ImageBuffer out = img;
  for (double& v : out.samples()) v = v * dg;
  return out;
}

ImageBuffer white_balance(const ImageBuffer& img, double wb_r, double wb_b) {
  require_positive(wb_r, "wb_r");
  require_positive(wb_b, "wb_b");
  ImageBuffer out = img;
  auto s = out.samples();
  for (std::size_t i = 0; i < s.size(); i += 3) wb_px(&s[i], wb_r, wb_b);
  return out;
}

ImageBuffer color_correct(const ImageBuffer& img, const IspParams::Matrix3& ccm,
                          const std::array<double, 3>& offset) {
  require_ccm(ccm, offset);
  ImageBuffer out = img;
  auto s = out.samples();
  for (std::size_t i = 0; i < s.size(); i += 3) ccm_px(&s[i], ccm, offset);
  return out;
}

ImageBuffer gamma_correct(const ImageBuffer& img, double gamma) {
  require_positive(gamma, "gamma");
  ImageBuffer out = img;
  active_kernels().gamma(out.samples(), gamma);
  return out;
}

ImageBuffer tone_map(const ImageBuffer& img, double s, double p1, double p2) {
  require_finite(s, "tone_s");
  require_positive(p1, "tone_p1");
  require_positive(p2, "tone_p2");
  ImageBuffer out = img;
  active_kernels().tone(out.samples(), s, p1, p2);
  return out;
}

ImageBuffer clamp_unit(const ImageBuffer& img) {
  ImageBuffer out = img;
  active_kernels().clamp_unit(out.samples());
  return out;
}

void render_samples(std::span<const double> src, const IspParams& p, std::span<double> dst) {
  if (src.size() != dst.size() || src.size() % 3 != 0) {
    throw Error(Errc::kShape, "render_samples: spans must hold the same whole pixels");
  }
  validate_full(p);
  const auto& k = active_kernels();
  const std::size_t pixels = src.size() / 3;
  for (std::size_t begin = 0; begin < pixels; begin += kBlockPixels) {
    const std::size_t end = std::min(pixels, begin + kBlockPixels);
    for (std::size_t i = begin * 3; i < end * 3; i += 3) {
      double* px = &dst[i];
      px[0] = src[i];
      px[1] = src[i + 1];
      px[2] = src[i + 2];
      gain_px(px, p.dg);
      wb_px(px, p.wb_r, p.wb_b);
      ccm_px(px, p.ccm, p.offset);
    }
    k.gamma_tone_clamp(dst.subspan(begin * 3, (end - begin) * 3), p.gamma, p.tone_s,
                       p.tone_p1, p.tone_p2);
  }
}

void apply_pipeline_into(const ImageBuffer& img, const IspParams& p, ImageBuffer& out) {
  validate_full(p);
  if (!out.same_shape(img) || out.sample_count() != img.sample_count()) {
    out = ImageBuffer(img.width(), img.height());
  }
  render_samples(img.samples(), p, out.samples());
}

ImageBuffer apply_pipeline(const ImageBuffer& img, const IspParams& params) {
  ImageBuffer out;
  apply_pipeline_into(img, params, out);
  return out;
}

std::uint64_t estimate_flops(std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) {
    throw Error(Errc::kArgument, "estimate_flops: dimensions must be positive");
  }
  return flops::kPerPixel * static_cast<std::uint64_t>(width) * height;
}

CurveSamples sample_curves(const IspParams& params, std::size_t n) {
  if (n < 2) throw Error(Errc::kArgument, "sample_curves: n must be >= 2");
  validate_full(params);
  CurveSamples c;
  c.x.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    c.x[j] = static_cast<double>(j) / static_cast<double>(n - 1);
  }
  const auto& k = active_kernels();
  c.gamma = c.x;
  k.gamma(c.gamma, params.gamma);
  c.tone = c.x;
  k.tone(c.tone, params.tone_s, params.tone_p1, params.tone_p2);
  for (auto& ch : c.ccm) ch.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double px[3] = {c.x[j], c.x[j], c.x[j]};
    gain_px(px, params.dg);
    wb_px(px, params.wb_r, params.wb_b);
    ccm_px(px, params.ccm, params.offset);
    for (std::size_t ch = 0; ch < 3; ++ch) c.ccm[ch][j] = px[ch];
  }
  return c;
}

}  // namespace cisp
