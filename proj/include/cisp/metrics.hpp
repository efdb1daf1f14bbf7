#pragma once

#include <json.hpp>

#include "cisp/image.hpp"

namespace cisp {

/// Mean of squared sample differences. Throws kShape on dimension mismatch.
double mse(const ImageBuffer& a, const ImageBuffer& b);

/// 10*log10(1/mse); +infinity when the images are identical.
double psnr_from_mse(double mse_value) noexcept;
double psnr(const ImageBuffer& a, const ImageBuffer& b);

// SSIM constants: 11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03, L 1.
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Rec.601 luma of each pixel, row-major.
std::vector<double> luma(const ImageBuffer& img);

/// Mean single-scale SSIM over all fully covered windows of the luma plane.
/// Throws kShape on mismatch and kArgument when a side is shorter than 11.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

struct QualityReport {
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

QualityReport quality_report(const ImageBuffer& a, const ImageBuffer& b);
/// psnr is written as the string "inf" when infinite.
nlohmann::json report_to_json(const QualityReport& r);

}  // namespace cisp
