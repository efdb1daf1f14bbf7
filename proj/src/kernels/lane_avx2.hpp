#pragma once

#include <immintrin.h>

#include <cstddef>

namespace cisp::simd {

// Four doubles per lane. Include only from translation units built with -mavx2.
struct Avx2Lane {
  using V = __m256d;
  using M = __m256d;
  static constexpr std::size_t kWidth = 4;

  static V load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, V v) { _mm256_storeu_pd(p, v); }
  static V set1(double x) { return _mm256_set1_pd(x); }

  static V add(V a, V b) { return _mm256_add_pd(a, b); }
  static V sub(V a, V b) { return _mm256_sub_pd(a, b); }
  static V mul(V a, V b) { return _mm256_mul_pd(a, b); }
  static V div(V a, V b) { return _mm256_div_pd(a, b); }

  static V max(V a, V b) { return _mm256_max_pd(a, b); }
  static V min(V a, V b) { return _mm256_min_pd(a, b); }

  static M gt(V a, V b) { return _mm256_cmp_pd(a, b, _CMP_GT_OQ); }
  static V select(M m, V if_true, V if_false) {
    return _mm256_blendv_pd(if_false, if_true, m);
  }

  static V round_nearest(V x) {
    return _mm256_round_pd(x, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  }

  static void split(V x, V& exponent, V& mantissa) {
    const __m256i bits = _mm256_castpd_si256(x);
    // Biased exponent (0..2047) converted exactly via the 2^52 magic constant.
    const __m256i biased = _mm256_srli_epi64(bits, 52);
    const __m256i magic = _mm256_set1_epi64x(0x4330000000000000ll);
    const __m256d as_double =
        _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(biased, magic)),
                      _mm256_set1_pd(4503599627370496.0));
    exponent = _mm256_sub_pd(as_double, _mm256_set1_pd(1023.0));
    const __m256i mant_bits =
        _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll)),
                        _mm256_set1_epi64x(0x3FF0000000000000ll));
    mantissa = _mm256_castsi256_pd(mant_bits);
  }

  static V pow2(V k) {
    // k + 1023 is an integer in [1, 2046]; adding 2^52 puts it in the low bits.
    const __m256d shifted = _mm256_add_pd(_mm256_add_pd(k, _mm256_set1_pd(1023.0)),
                                          _mm256_set1_pd(4503599627370496.0));
    const __m256i biased = _mm256_and_si256(_mm256_castpd_si256(shifted),
                                            _mm256_set1_epi64x(0x7FF));
    return _mm256_castsi256_pd(_mm256_slli_epi64(biased, 52));
  }
};

}  // namespace cisp::simd
