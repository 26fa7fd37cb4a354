// AVX2+FMA backend.  Compiled with -mavx2 -mfma on this translation unit
// only; callers reach it through the dispatch table, never directly.
//
// The vector exp/log are written from first principles:
//
//   exp(x):  n = round(x/ln2); r = x - n*ln2 (hi/lo split, |r| <= ln2/2);
//            e^r by degree-11 Taylor (max rel. error ~7e-15 on the reduced
//            interval); scale by 2^n through direct exponent-field assembly.
//            Domain used here is x in [-theta, 0]; inputs are clamped to
//            [-700, 700] so the scaling never leaves the normal range.
//
//   log(x):  x = 2^e * m with m in [sqrt2/2, sqrt2); z = (m-1)/(m+1);
//            log m = 2 atanh(z) by odd polynomial through z^19
//            (|z| <= 0.1716, truncation < 1e-16); recombine with the same
//            ln2 split.  Requires x positive and normal, which B guarantees.
#include "frank/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace frank::kernels {

namespace {

// ln2 = LN2_HI + LN2_LO + O(2^-81); LN2_HI has 26 significant bits so that
// n * LN2_HI is exact for |n| < 2^26.
constexpr double kLn2Hi = 46516319.0 / 67108864.0;
constexpr double kLn2Lo = 1.2996506893889889e-08;
constexpr double kInvLn2 = 1.4426950408889634074;
constexpr double kSqrt2 = 1.4142135623730951;

inline __m256d exp256(__m256d x) {
  const __m256d clamp_lo = _mm256_set1_pd(-700.0);
  const __m256d clamp_hi = _mm256_set1_pd(700.0);
  x = _mm256_min_pd(_mm256_max_pd(x, clamp_lo), clamp_hi);

  const __m256d nd = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kInvLn2)),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(nd, _mm256_set1_pd(kLn2Hi), x);
  r = _mm256_fnmadd_pd(nd, _mm256_set1_pd(kLn2Lo), r);

  // Taylor coefficients 1/k!, Horner from k = 11 down.
  __m256d p = _mm256_set1_pd(1.0 / 39916800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^n: assemble the exponent field directly; n in [-1010, 1011] keeps
  // n + 1023 in the normal range.
  const __m128i n32 = _mm256_cvtpd_epi32(nd);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i expo =
      _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(expo));
}

inline __m256d log256(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);

  // Biased exponent as a double, via the 2^52 magic-number trick.
  const __m256i ebits = _mm256_srli_epi64(bits, 52);
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000LL);
  const __m256d eb =
      _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(ebits, magic)),
                    _mm256_set1_pd(4503599627370496.0));
  __m256d e = _mm256_sub_pd(eb, _mm256_set1_pd(1023.0));

  // Mantissa remapped to [1, 2).
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));

  // Fold [sqrt2, 2) down so m lies in [sqrt2/2, sqrt2).
  const __m256d gt = _mm256_cmp_pd(m, _mm256_set1_pd(kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), gt);
  e = _mm256_add_pd(e, _mm256_and_pd(gt, _mm256_set1_pd(1.0)));

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d z =
      _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d z2 = _mm256_mul_pd(z, z);

  // 2*atanh(z) = 2z (1 + z^2/3 + z^4/5 + ... + z^18/19).
  __m256d p = _mm256_set1_pd(1.0 / 19.0);
  p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 17.0));
  p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 15.0));
  p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 13.0));
  p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 11.0));
  p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 9.0));
  p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 7.0));
  p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 5.0));
  p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 3.0));
  p = _mm256_fmadd_pd(p, z2, one);
  const __m256d log_m = _mm256_mul_pd(_mm256_add_pd(z, z), p);

  __m256d res = _mm256_fmadd_pd(e, _mm256_set1_pd(kLn2Lo), log_m);
  res = _mm256_fmadd_pd(e, _mm256_set1_pd(kLn2Hi), res);
  return res;
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double accum_avx2(const double* m, const double* d, std::size_t n, double theta) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d neg_theta = _mm256_set1_pd(-theta);
  __m256d acc_logb = _mm256_setzero_pd();
  __m256d acc_d = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mv = _mm256_loadu_pd(m + i);
    const __m256d dv = _mm256_loadu_pd(d + i);
    const __m256d e1 = exp256(_mm256_mul_pd(neg_theta, _mm256_sub_pd(one, mv)));
    const __m256d em = exp256(_mm256_mul_pd(neg_theta, mv));
    const __m256d ed = exp256(_mm256_mul_pd(neg_theta, dv));
    const __m256d b = _mm256_add_pd(
        _mm256_sub_pd(one, e1), _mm256_mul_pd(ed, _mm256_sub_pd(one, em)));
    acc_logb = _mm256_add_pd(acc_logb, log256(b));
    acc_d = _mm256_add_pd(acc_d, dv);
  }
  double sum_logb = hsum(acc_logb);
  double sum_d = hsum(acc_d);
  for (; i < n; ++i) {
    const double b = -std::expm1(-theta * (1.0 - m[i])) +
                     std::exp(-theta * d[i]) * (-std::expm1(-theta * m[i]));
    sum_logb += std::log(b);
    sum_d += d[i];
  }
  return -theta * sum_d - 2.0 * sum_logb;
}

}  // namespace

const Backend& avx2_backend_impl() {
  static const Backend b{"avx2", &accum_avx2};
  return b;
}

// Test hooks: expose the vector transcendentals for direct accuracy checks.
void avx2_exp4_impl(const double in[4], double out[4]) {
  _mm256_storeu_pd(out, exp256(_mm256_loadu_pd(in)));
}

void avx2_log4_impl(const double in[4], double out[4]) {
  _mm256_storeu_pd(out, log256(_mm256_loadu_pd(in)));
}

}  // namespace frank::kernels

#endif  // __AVX2__ && __FMA__
