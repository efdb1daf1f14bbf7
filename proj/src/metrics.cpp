#include "cisp/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "cisp/error.hpp"

namespace cisp {

double mse(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw Error(Errc::kShape, "mse: image dimensions differ");
  const auto sa = a.samples();
  const auto sb = b.samples();
  if (sa.empty()) throw Error(Errc::kShape, "mse: empty images");
  double acc = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = sa[i] - sb[i];
    acc += d * d;
  }
  return acc / static_cast<double>(sa.size());
}

double psnr_from_mse(double mse_value) noexcept {
  if (mse_value <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse_value);
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) { return psnr_from_mse(mse(a, b)); }

std::vector<double> luma(const ImageBuffer& img) {
  std::vector<double> y(img.pixel_count());
  const auto s = img.samples();
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.299 * s[3 * i] + 0.587 * s[3 * i + 1] + 0.114 * s[3 * i + 2];
  }
  return y;
}

namespace {

std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> taps{};
  double sum = 0.0;
  const int half = kSsimWindow / 2;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    taps[i] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable "valid" filtering: output is (w-10) x (h-10).
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t w, std::size_t h,
                                 const std::array<double, kSsimWindow>& taps) {
  const std::size_t ow = w - kSsimWindow + 1;
  const std::size_t oh = h - kSsimWindow + 1;
  std::vector<double> rows(ow * h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += taps[k] * src[y * w + x + k];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(ow * oh);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += taps[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw Error(Errc::kShape, "ssim: image dimensions differ");
  const std::size_t w = a.width(), h = a.height();
  if (w < static_cast<std::size_t>(kSsimWindow) || h < static_cast<std::size_t>(kSsimWindow)) {
    throw Error(Errc::kArgument, "ssim: images must be at least 11x11");
  }
  const auto ya = luma(a);
  const auto yb = luma(b);
  std::vector<double> aa(ya.size()), bb(ya.size()), ab(ya.size());
  for (std::size_t i = 0; i < ya.size(); ++i) {
    aa[i] = ya[i] * ya[i];
    bb[i] = yb[i] * yb[i];
    ab[i] = ya[i] * yb[i];
  }
  const auto taps = gaussian_taps();
  const auto mu_a = filter_valid(ya, w, h, taps);
  const auto mu_b = filter_valid(yb, w, h, taps);
  const auto e_aa = filter_valid(aa, w, h, taps);
  const auto e_bb = filter_valid(bb, w, h, taps);
  const auto e_ab = filter_valid(ab, w, h, taps);

  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    const double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
    const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
    acc += num / den;
  }
  return acc / static_cast<double>(mu_a.size());
}

QualityReport quality_report(const ImageBuffer& a, const ImageBuffer& b) {
  QualityReport r;
  r.mse = mse(a, b);
  r.psnr = psnr_from_mse(r.mse);
  r.ssim = ssim(a, b);
  return r;
}

nlohmann::json report_to_json(const QualityReport& r) {
  nlohmann::json doc;
  doc["mse"] = r.mse;
  if (std::isinf(r.psnr)) {
    doc["psnr"] = "inf";
  } else {
    doc["psnr"] = r.psnr;
  }
  doc["ssim"] = r.ssim;
  return doc;
}

}  // namespace cisp
