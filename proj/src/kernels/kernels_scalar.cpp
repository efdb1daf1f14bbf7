#include "cisp/kernels.hpp"

#include "curve_math.hpp"
#include "lane_scalar.hpp"

namespace cisp {
namespace {

using simd::ScalarLane;

void gamma_scalar(std::span<double> xs, double gamma) {
  simd::gamma_span<ScalarLane, ScalarLane>(xs, gamma);
}

void tone_scalar(std::span<double> xs, double s, double p1, double p2) {
  simd::tone_span<ScalarLane, ScalarLane>(xs, s, p1, p2);
}

void gamma_tone_clamp_scalar(std::span<double> xs, double gamma, double s, double p1,
                             double p2) {
  simd::gamma_tone_clamp_span<ScalarLane, ScalarLane>(xs, gamma, s, p1, p2);
}

void clamp_scalar(std::span<double> xs) { simd::clamp_span<ScalarLane, ScalarLane>(xs); }

}  // namespace

const CurveKernels& scalar_kernels() noexcept {
  static const CurveKernels k{KernelBackend::kScalar, &gamma_scalar, &tone_scalar,
                              &gamma_tone_clamp_scalar, &clamp_scalar};
  return k;
}

double curve_log(double x) noexcept { return simd::log_pos<ScalarLane>(x); }
double curve_exp(double x) noexcept { return simd::exp_clamped<ScalarLane>(x); }
double curve_pow(double x, double p) noexcept {
  return simd::exp_clamped<ScalarLane>(p * simd::log_pos<ScalarLane>(x));
}

}  // namespace cisp
