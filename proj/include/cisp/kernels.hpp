#pragma once

// Per-sample curve kernels (gamma, tone, fused gamma+tone+clamp).
//
// Every backend evaluates the same sequence of IEEE double operations, so the
// scalar reference and the SIMD variants produce bit-identical output. The
// active backend is picked once at startup from what the CPU supports and
// can be overridden with CISP_KERNELS=scalar|avx2 or set_kernel_backend().

#include <span>
#include <string_view>
#include <vector>

namespace cisp {

/// Floor applied inside every power: max(x, eps)^p.
inline constexpr double kPowFloor = 1e-8;

enum class KernelBackend { kScalar, kAvx2 };

std::string_view backend_name(KernelBackend b) noexcept;

struct CurveKernels {
  KernelBackend backend;
  // In place: x <- max(x, eps)^gamma
  void (*gamma)(std::span<double> samples, double gamma);
  // In place: x <- b + s*(a - b), a = max(x, eps)^p1, b = max(x, eps)^p2
  void (*tone)(std::span<double> samples, double s, double p1, double p2);
  // In place: clamp01(tone(gamma(x)))
  void (*gamma_tone_clamp)(std::span<double> samples, double gamma, double s,
                           double p1, double p2);
  // In place: x <- min(max(x, 0), 1)
  void (*clamp_unit)(std::span<double> samples);
};

const CurveKernels& scalar_kernels() noexcept;
/// nullptr when the backend was not compiled in or the CPU lacks it.
const CurveKernels* kernels_for(KernelBackend b) noexcept;
std::vector<KernelBackend> available_backends();

const CurveKernels& active_kernels() noexcept;
/// Throws kArgument if the backend is unavailable.
void set_kernel_backend(KernelBackend b);

// Scalar entry points into the shared log/exp approximation; used by
// pipeline plumbing that needs single values.
double curve_log(double x) noexcept;
double curve_exp(double x) noexcept;
double curve_pow(double x, double p) noexcept;

}  // namespace cisp
