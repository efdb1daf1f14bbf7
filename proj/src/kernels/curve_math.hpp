#pragma once

// Lane-generic log/exp and the per-sample curves built on them.
//
// log and exp follow the classic fdlibm reductions (e_log.c, e_exp.c) written
// branch-free so that each lane type executes the identical operation
// sequence. Accuracy is within a few ulp of the correctly rounded result for
// the domain used here: positive normal arguments to log, |x| <= 708 for exp.

#include <cstddef>
#include <span>

namespace cisp::simd {

inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kInvLn2 = 1.44269504088896338700e+00;
inline constexpr double kSqrt2 = 1.41421356237309514547e+00;

inline constexpr double kLg1 = 6.666666666666735130e-01;
inline constexpr double kLg2 = 3.999999999940941908e-01;
inline constexpr double kLg3 = 2.857142874366239149e-01;
inline constexpr double kLg4 = 2.222219843214978396e-01;
inline constexpr double kLg5 = 1.818357216161805012e-01;
inline constexpr double kLg6 = 1.531383769920937332e-01;
inline constexpr double kLg7 = 1.479819860511658591e-01;

inline constexpr double kP1 = 1.66666666666666019037e-01;
inline constexpr double kP2 = -2.77777777770155933842e-03;
inline constexpr double kP3 = 6.61375632143793436117e-05;
inline constexpr double kP4 = -1.65339022054652515390e-06;
inline constexpr double kP5 = 4.13813679705723846039e-08;

inline constexpr double kExpMin = -708.0;
inline constexpr double kExpMax = 709.0;

/// Natural log for positive normal x.
template <class L>
typename L::V log_pos(typename L::V x) {
  using V = typename L::V;
  V k, m;
  L::split(x, k, m);
  // Reduce the mantissa to [sqrt(2)/2, sqrt(2)).
  const auto high = L::gt(m, L::set1(kSqrt2));
  m = L::select(high, L::mul(m, L::set1(0.5)), m);
  k = L::select(high, L::add(k, L::set1(1.0)), k);

  const V f = L::sub(m, L::set1(1.0));
  const V s = L::div(f, L::add(L::set1(2.0), f));
  const V z = L::mul(s, s);
  const V w = L::mul(z, z);
  const V t1 = L::mul(w, L::add(L::set1(kLg2),
                                L::mul(w, L::add(L::set1(kLg4), L::mul(w, L::set1(kLg6))))));
  const V t2 = L::mul(
      z, L::add(L::set1(kLg1),
                L::mul(w, L::add(L::set1(kLg3),
                                 L::mul(w, L::add(L::set1(kLg5), L::mul(w, L::set1(kLg7))))))));
  const V r = L::add(t2, t1);
  const V hfsq = L::mul(L::set1(0.5), L::mul(f, f));
  // k*ln2_hi - ((hfsq - (s*(hfsq + R) + k*ln2_lo)) - f)
  const V inner = L::add(L::mul(s, L::add(hfsq, r)), L::mul(k, L::set1(kLn2Lo)));
  return L::sub(L::mul(k, L::set1(kLn2Hi)), L::sub(L::sub(hfsq, inner), f));
}

/// e^x, argument clamped to [-708, 709].
template <class L>
typename L::V exp_clamped(typename L::V x) {
  using V = typename L::V;
  x = L::min(L::max(x, L::set1(kExpMin)), L::set1(kExpMax));
  const V k = L::round_nearest(L::mul(x, L::set1(kInvLn2)));
  const V hi = L::sub(x, L::mul(k, L::set1(kLn2Hi)));
  const V lo = L::mul(k, L::set1(kLn2Lo));
  const V r = L::sub(hi, lo);
  const V t = L::mul(r, r);
  const V poly = L::add(
      L::set1(kP1),
      L::mul(t, L::add(L::set1(kP2),
                       L::mul(t, L::add(L::set1(kP3),
                                        L::mul(t, L::add(L::set1(kP4),
                                                         L::mul(t, L::set1(kP5)))))))));
  const V c = L::sub(r, L::mul(t, poly));
  // 1 - ((lo - (r*c)/(2 - c)) - hi)
  const V q = L::div(L::mul(r, c), L::sub(L::set1(2.0), c));
  const V y = L::sub(L::set1(1.0), L::sub(L::sub(lo, q), hi));
  return L::mul(y, L::pow2(k));
}

template <class L>
typename L::V floored_log(typename L::V x) {
  return log_pos<L>(L::max(x, L::set1(1e-8)));
}

template <class L>
typename L::V gamma_curve(typename L::V x, typename L::V gamma) {
  return exp_clamped<L>(L::mul(gamma, floored_log<L>(x)));
}

// s*a - (s-1)*b rewritten as b + s*(a - b): identical function, and the
// (1,1) endpoint comes out exact for every s.
template <class L>
typename L::V tone_curve(typename L::V x, typename L::V s, typename L::V p1,
                         typename L::V p2) {
  using V = typename L::V;
  const V lx = floored_log<L>(x);
  const V a = exp_clamped<L>(L::mul(p1, lx));
  const V b = exp_clamped<L>(L::mul(p2, lx));
  return L::add(b, L::mul(s, L::sub(a, b)));
}

template <class L>
typename L::V clamp_unit(typename L::V x) {
  return L::min(L::max(x, L::set1(0.0)), L::set1(1.0));
}

// Span drivers: full lanes through L, the tail through Tail (the scalar lane).

template <class L, class Tail, class Op>
void for_each_lane(std::span<double> xs, Op op) {
  std::size_t i = 0;
  const std::size_t n = xs.size();
  double* p = xs.data();
  for (; i + L::kWidth <= n; i += L::kWidth) {
    L::store(p + i, op.template operator()<L>(L::load(p + i)));
  }
  for (; i < n; ++i) {
    Tail::store(p + i, op.template operator()<Tail>(Tail::load(p + i)));
  }
}

template <class L, class Tail>
void gamma_span(std::span<double> xs, double gamma) {
  for_each_lane<L, Tail>(xs, [gamma]<class X>(typename X::V v) {
    return gamma_curve<X>(v, X::set1(gamma));
  });
}

template <class L, class Tail>
void tone_span(std::span<double> xs, double s, double p1, double p2) {
  for_each_lane<L, Tail>(xs, [=]<class X>(typename X::V v) {
    return tone_curve<X>(v, X::set1(s), X::set1(p1), X::set1(p2));
  });
}

template <class L, class Tail>
void gamma_tone_clamp_span(std::span<double> xs, double gamma, double s, double p1,
                           double p2) {
  gamma_span<L, Tail>(xs, gamma);
  for_each_lane<L, Tail>(xs, [=]<class X>(typename X::V v) {
    return clamp_unit<X>(tone_curve<X>(v, X::set1(s), X::set1(p1), X::set1(p2)));
  });
}

template <class L, class Tail>
void clamp_span(std::span<double> xs) {
  for_each_lane<L, Tail>(xs, []<class X>(typename X::V v) { return clamp_unit<X>(v); });
}

}  // namespace cisp::simd
