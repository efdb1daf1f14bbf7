#include <atomic>
#include <cstdlib>
#include <string>

#include "cisp/error.hpp"
#include "cisp/kernels.hpp"

namespace cisp {

#ifdef CISP_HAVE_AVX2
const CurveKernels& avx2_kernels() noexcept;
#endif

namespace {

bool cpu_has_avx2() noexcept {
#if defined(CISP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const CurveKernels* initial_kernels() noexcept {
  const CurveKernels* best = &scalar_kernels();
  if (const auto* avx2 = kernels_for(KernelBackend::kAvx2)) best = avx2;
  if (const char* env = std::getenv("CISP_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && kernels_for(KernelBackend::kAvx2) != nullptr)
      return kernels_for(KernelBackend::kAvx2);
  }
  return best;
}

std::atomic<const CurveKernels*>& active_slot() noexcept {
  static std::atomic<const CurveKernels*> slot{initial_kernels()};
  return slot;
}

}  // namespace

std::string_view backend_name(KernelBackend b) noexcept {
  switch (b) {
    case KernelBackend::kScalar: return "scalar";
    case KernelBackend::kAvx2: return "avx2";
  }
  return "unknown";
}

const CurveKernels* kernels_for(KernelBackend b) noexcept {
  switch (b) {
    case KernelBackend::kScalar:
      return &scalar_kernels();
    case KernelBackend::kAvx2:
#ifdef CISP_HAVE_AVX2
      if (cpu_has_avx2()) return &avx2_kernels();
#endif
      return nullptr;
  }
  return nullptr;
}

std::vector<KernelBackend> available_backends() {
  std::vector<KernelBackend> out{KernelBackend::kScalar};
  if (kernels_for(KernelBackend::kAvx2) != nullptr) out.push_back(KernelBackend::kAvx2);
  return out;
}

const CurveKernels& active_kernels() noexcept {
  return *active_slot().load(std::memory_order_acquire);
}

void set_kernel_backend(KernelBackend b) {
  const CurveKernels* k = kernels_for(b);
  if (k == nullptr) {
    throw Error(Errc::kArgument,
                "kernel backend not available: " + std::string(backend_name(b)));
  }
  active_slot().store(k, std::memory_order_release);
}

}  // namespace cisp
