// Built with -mavx2; only reached after a runtime CPU check.

#include "cisp/kernels.hpp"

#include "curve_math.hpp"
#include "lane_avx2.hpp"
#include "lane_scalar.hpp"

namespace cisp {
namespace {

using simd::Avx2Lane;
using simd::ScalarLane;

void gamma_avx2(std::span<double> xs, double gamma) {
  simd::gamma_span<Avx2Lane, ScalarLane>(xs, gamma);
}

void tone_avx2(std::span<double> xs, double s, double p1, double p2) {
  simd::tone_span<Avx2Lane, ScalarLane>(xs, s, p1, p2);
}

void gamma_tone_clamp_avx2(std::span<double> xs, double gamma, double s, double p1,
                           double p2) {
  simd::gamma_tone_clamp_span<Avx2Lane, ScalarLane>(xs, gamma, s, p1, p2);
}

void clamp_avx2(std::span<double> xs) { simd::clamp_span<Avx2Lane, ScalarLane>(xs); }

}  // namespace

const CurveKernels& avx2_kernels() noexcept {
  static const CurveKernels k{KernelBackend::kAvx2, &gamma_avx2, &tone_avx2,
                              &gamma_tone_clamp_avx2, &clamp_avx2};
  return k;
}

}  // namespace cisp
