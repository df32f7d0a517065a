#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "bergman/kernels.hpp"

namespace bergman::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

double one_minus_rho_sum(double zr, double zi, const double* re, const double* im, std::size_t n) {
  const double omz_s = 1.0 - (zr * zr + zi * zi);
  const __m256d vzr = _mm256_set1_pd(zr);
  const __m256d vzi = _mm256_set1_pd(zi);
  const __m256d omz = _mm256_set1_pd(omz_s);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = zero;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d lr = _mm256_loadu_pd(re + j);
    const __m256d li = _mm256_loadu_pd(im + j);
    const __m256d dr = _mm256_sub_pd(vzr, lr);
    const __m256d di = _mm256_sub_pd(vzi, li);
    const __m256d num = _mm256_fmadd_pd(dr, dr, _mm256_mul_pd(di, di));
    const __m256d ar = _mm256_sub_pd(one, _mm256_fmadd_pd(lr, vzr, _mm256_mul_pd(li, vzi)));
    const __m256d ai = _mm256_fmsub_pd(lr, vzi, _mm256_mul_pd(li, vzr));
    const __m256d den = _mm256_fmadd_pd(ar, ar, _mm256_mul_pd(ai, ai));
    const __m256d rho2 = _mm256_div_pd(num, den);
    const __m256d oml = _mm256_sub_pd(one, _mm256_fmadd_pd(lr, lr, _mm256_mul_pd(li, li)));
    const __m256d omr2 = _mm256_div_pd(_mm256_mul_pd(omz, oml), den);
    const __m256d near = _mm256_cmp_pd(rho2, half, _CMP_LT_OQ);
    const __m256d rho_near = _mm256_sqrt_pd(rho2);
    const __m256d rho_far = _mm256_sqrt_pd(_mm256_max_pd(zero, _mm256_sub_pd(one, omr2)));
    const __m256d rho = _mm256_blendv_pd(rho_far, rho_near, near);
    acc = _mm256_add_pd(acc, _mm256_div_pd(omr2, _mm256_add_pd(one, rho)));
  }
  double sum = hsum(acc);
  if (j < n) sum += scalar::one_minus_rho_sum(zr, zi, re + j, im + j, n - j);
  return sum;
}

// Multiplies rho^2 lane-wise and strips the binary exponent after every step,
// so only four logarithms are taken per call instead of one per point.
double log_rho_sum(double zr, double zi, const double* re, const double* im, std::size_t n) {
  const __m256d vzr = _mm256_set1_pd(zr);
  const __m256d vzi = _mm256_set1_pd(zi);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  const __m256i bias = _mm256_set1_epi64x(1023);
  __m256d prod = one;
  __m256d minv = one;
  __m256i expo = _mm256_setzero_si256();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d lr = _mm256_loadu_pd(re + j);
    const __m256d li = _mm256_loadu_pd(im + j);
    const __m256d dr = _mm256_sub_pd(vzr, lr);
    const __m256d di = _mm256_sub_pd(vzi, li);
    const __m256d num = _mm256_fmadd_pd(dr, dr, _mm256_mul_pd(di, di));
    const __m256d ar = _mm256_sub_pd(one, _mm256_fmadd_pd(lr, vzr, _mm256_mul_pd(li, vzi)));
    const __m256d ai = _mm256_fmsub_pd(lr, vzi, _mm256_mul_pd(li, vzr));
    const __m256d den = _mm256_fmadd_pd(ar, ar, _mm256_mul_pd(ai, ai));
    const __m256d rho2 = _mm256_div_pd(num, den);
    minv = _mm256_min_pd(minv, rho2);
    prod = _mm256_mul_pd(prod, rho2);
    const __m256i bits = _mm256_castpd_si256(prod);
    expo = _mm256_add_epi64(expo, _mm256_sub_epi64(_mm256_srli_epi64(bits, 52), bias));
    prod = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  }
  alignas(32) double mins[4];
  _mm256_store_pd(mins, minv);
  for (double m : mins) {
    // Subnormal or zero factors break the exponent trick; the reference path
    // handles them (and reports an exact hit as -inf).
    if (!(m >= 1e-300)) return scalar::log_rho_sum(zr, zi, re, im, n);
  }
  alignas(32) double p[4];
  alignas(32) std::int64_t e[4];
  _mm256_store_pd(p, prod);
  _mm256_store_si256(reinterpret_cast<__m256i*>(e), expo);
  const double log_prod = (std::log(p[0]) + std::log(p[1])) + (std::log(p[2]) + std::log(p[3]));
  const double total_expo = static_cast<double>(e[0] + e[1] + e[2] + e[3]);
  double sum = 0.5 * (log_prod + total_expo * std::numbers::ln2);
  if (j < n) sum += scalar::log_rho_sum(zr, zi, re + j, im + j, n - j);
  return sum;
}

void real_series(const double* coef, std::size_t ncoef, const double* x, double* out,
                 std::size_t n) {
  std::size_t i = 0;
  // Two vectors per pass hide the FMA latency of the Horner chain.
  for (; i + 8 <= n; i += 8) {
    const __m256d x0 = _mm256_loadu_pd(x + i);
    const __m256d x1 = _mm256_loadu_pd(x + i + 4);
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    for (std::size_t k = ncoef; k-- > 0;) {
      const __m256d c = _mm256_set1_pd(coef[k]);
      a0 = _mm256_fmadd_pd(a0, x0, c);
      a1 = _mm256_fmadd_pd(a1, x1, c);
    }
    _mm256_storeu_pd(out + i, a0);
    _mm256_storeu_pd(out + i + 4, a1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d x0 = _mm256_loadu_pd(x + i);
    __m256d a0 = _mm256_setzero_pd();
    for (std::size_t k = ncoef; k-- > 0;) a0 = _mm256_fmadd_pd(a0, x0, _mm256_set1_pd(coef[k]));
    _mm256_storeu_pd(out + i, a0);
  }
  if (i < n) scalar::real_series(coef, ncoef, x + i, out + i, n - i);
}

void complex_series(const double* coef, std::size_t ncoef, const double* wr, const double* wi,
                    double* out_re, double* out_im, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d r0 = _mm256_loadu_pd(wr + i);
    const __m256d i0 = _mm256_loadu_pd(wi + i);
    const __m256d r1 = _mm256_loadu_pd(wr + i + 4);
    const __m256d i1 = _mm256_loadu_pd(wi + i + 4);
    __m256d ar0 = _mm256_setzero_pd(), ai0 = _mm256_setzero_pd();
    __m256d ar1 = _mm256_setzero_pd(), ai1 = _mm256_setzero_pd();
    for (std::size_t k = ncoef; k-- > 0;) {
      const __m256d c = _mm256_set1_pd(coef[k]);
      const __m256d tr0 = _mm256_fmsub_pd(ar0, r0, _mm256_fmsub_pd(ai0, i0, c));
      ai0 = _mm256_fmadd_pd(ar0, i0, _mm256_mul_pd(ai0, r0));
      ar0 = tr0;
      const __m256d tr1 = _mm256_fmsub_pd(ar1, r1, _mm256_fmsub_pd(ai1, i1, c));
      ai1 = _mm256_fmadd_pd(ar1, i1, _mm256_mul_pd(ai1, r1));
      ar1 = tr1;
    }
    _mm256_storeu_pd(out_re + i, ar0);
    _mm256_storeu_pd(out_im + i, ai0);
    _mm256_storeu_pd(out_re + i + 4, ar1);
    _mm256_storeu_pd(out_im + i + 4, ai1);
  }
  if (i < n) scalar::complex_series(coef, ncoef, wr + i, wi + i, out_re + i, out_im + i, n - i);
}

}  // namespace bergman::kernels::avx2
