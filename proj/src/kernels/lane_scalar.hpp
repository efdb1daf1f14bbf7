#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace cisp::simd {

// One double per lane. The reference every wider lane must reproduce exactly.
struct ScalarLane {
  using V = double;
  using M = bool;
  static constexpr std::size_t kWidth = 1;

  static V load(const double* p) { return *p; }
  static void store(double* p, V v) { *p = v; }
  static V set1(double x) { return x; }

  static V add(V a, V b) { return a + b; }
  static V sub(V a, V b) { return a - b; }
  static V mul(V a, V b) { return a * b; }
  static V div(V a, V b) { return a / b; }

  // Operand order matches maxpd/minpd: the second operand wins on ties and NaN.
  static V max(V a, V b) { return a > b ? a : b; }
  static V min(V a, V b) { return a < b ? a : b; }

  static M gt(V a, V b) { return a > b; }
  static V select(M m, V if_true, V if_false) { return m ? if_true : if_false; }

  static V round_nearest(V x) { return std::nearbyint(x); }

  // x positive normal: x = mantissa * 2^exponent, mantissa in [1, 2).
  static void split(V x, V& exponent, V& mantissa) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    exponent = static_cast<double>(static_cast<std::int64_t>(bits >> 52) - 1023);
    mantissa = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) |
                                     0x3FF0000000000000ull);
  }

  // 2^k for integral k in [-1022, 1023].
  static V pow2(V k) {
    const auto biased = static_cast<std::uint64_t>(static_cast<std::int64_t>(k) + 1023);
    return std::bit_cast<double>(biased << 52);
  }
};

}  // namespace cisp::simd
