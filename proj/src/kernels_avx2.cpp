#include <stdexcept>

#include "bbm/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include "kernels_detail.hpp"

// AVX2 backend. Every routine replays the scalar backend's operation
// sequence four lanes at a time: same polynomials, same (a0+a2)+(a1+a3)
// reduction tree, scalar tail loops borrowed from kernels_detail.hpp. The
// translation unit is built with -mavx2 but without -mfma, so no contraction
// can sneak in and the two backends stay bit-identical.

namespace bbm::kernels {
namespace {

using namespace detail;

inline __m256d v_set1(double v) { return _mm256_set1_pd(v); }

inline double hsum_tree(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s2 = _mm_add_pd(lo, hi);  // {a0+a2, a1+a3}
  return _mm_cvtsd_f64(_mm_add_sd(s2, _mm_unpackhi_pd(s2, s2)));
}

inline __m256d v_log(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  // Biased exponent as a double via the 2^52 magic-number trick (sign bit is
  // clear because x > 0), then unbias.
  const __m256i biased = _mm256_srli_epi64(bits, 52);
  const __m256d magic =
      _mm256_castsi256_pd(_mm256_or_si256(biased, _mm256_set1_epi64x(0x4330000000000000LL)));
  __m256d e = _mm256_sub_pd(magic, v_set1(4503599627370496.0 + 1023.0));
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                      _mm256_set1_epi64x(0x3FF0000000000000LL)));
  const __m256d big = _mm256_cmp_pd(m, v_set1(kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, v_set1(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, v_set1(1.0)));

  const __m256d z =
      _mm256_div_pd(_mm256_sub_pd(m, v_set1(1.0)), _mm256_add_pd(m, v_set1(1.0)));
  const __m256d s = _mm256_mul_pd(z, z);
  __m256d p = v_set1(1.0 / 23.0);
  p = _mm256_add_pd(_mm256_mul_pd(p, s), v_set1(1.0 / 21.0));
  p = _mm256_add_pd(_mm256_mul_pd(p, s), v_set1(1.0 / 19.0));
  p = _mm256_add_pd(_mm256_mul_pd(p, s), v_set1(1.0 / 17.0));
  p = _mm256_add_pd(_mm256_mul_pd(p, s), v_set1(1.0 / 15.0));
  p = _mm256_add_pd(_mm256_mul_pd(p, s), v_set1(1.0 / 13.0));
  p = _mm256_add_pd(_mm256_mul_pd(p, s), v_set1(1.0 / 11.0));
  p = _mm256_add_pd(_mm256_mul_pd(p, s), v_set1(1.0 / 9.0));
  p = _mm256_add_pd(_mm256_mul_pd(p, s), v_set1(1.0 / 7.0));
  p = _mm256_add_pd(_mm256_mul_pd(p, s), v_set1(1.0 / 5.0));
  p = _mm256_add_pd(_mm256_mul_pd(p, s), v_set1(1.0 / 3.0));
  const __m256d two_z = _mm256_mul_pd(v_set1(2.0), z);
  const __m256d r =
      _mm256_add_pd(two_z, _mm256_mul_pd(_mm256_mul_pd(two_z, s), p));
  return _mm256_add_pd(_mm256_mul_pd(e, v_set1(kLn2Hi)),
                       _mm256_add_pd(r, _mm256_mul_pd(e, v_set1(kLn2Lo))));
}

inline __m256d v_exp(__m256d x) {
  const __m256d under = _mm256_cmp_pd(x, v_set1(kExpUnderflow), _CMP_LT_OQ);
  const __m256d n = _mm256_floor_pd(
      _mm256_add_pd(_mm256_mul_pd(v_set1(kLog2E), x), v_set1(0.5)));
  __m256d r = _mm256_sub_pd(x, _mm256_mul_pd(n, v_set1(kExpC1)));
  r = _mm256_sub_pd(r, _mm256_mul_pd(n, v_set1(kExpC2)));
  const __m256d rr = _mm256_mul_pd(r, r);
  const __m256d p = _mm256_mul_pd(
      r, _mm256_add_pd(
             _mm256_mul_pd(_mm256_add_pd(_mm256_mul_pd(v_set1(kExpP0), rr),
                                         v_set1(kExpP1)),
                           rr),
             v_set1(kExpP2)));
  const __m256d q = _mm256_add_pd(
      _mm256_mul_pd(
          _mm256_add_pd(
              _mm256_mul_pd(_mm256_add_pd(_mm256_mul_pd(v_set1(kExpQ0), rr),
                                          v_set1(kExpQ1)),
                            rr),
              v_set1(kExpQ2)),
          rr),
      v_set1(kExpQ3));
  __m256d y = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  y = _mm256_add_pd(v_set1(1.0), _mm256_mul_pd(v_set1(2.0), y));
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i pow2 =
      _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  y = _mm256_mul_pd(y, _mm256_castsi256_pd(pow2));
  return _mm256_andnot_pd(under, y);
}

inline __m256d v_digamma(__m256d x) {
  const __m256d one = v_set1(1.0);
  const __m256d eight = v_set1(8.0);
  __m256d acc = _mm256_setzero_pd();
  for (int it = 0; it < 8; ++it) {
    const __m256d low = _mm256_cmp_pd(x, eight, _CMP_LT_OQ);
    acc = _mm256_sub_pd(acc, _mm256_and_pd(low, _mm256_div_pd(one, x)));
    x = _mm256_add_pd(x, _mm256_and_pd(low, one));
  }
  const __m256d inv = _mm256_div_pd(one, x);
  const __m256d r = _mm256_mul_pd(inv, inv);
  __m256d t = _mm256_sub_pd(v_set1(kPsi6), _mm256_mul_pd(r, v_set1(kPsi7)));
  t = _mm256_sub_pd(v_set1(kPsi5), _mm256_mul_pd(r, t));
  t = _mm256_sub_pd(v_set1(kPsi4), _mm256_mul_pd(r, t));
  t = _mm256_sub_pd(v_set1(kPsi3), _mm256_mul_pd(r, t));
  t = _mm256_sub_pd(v_set1(kPsi2), _mm256_mul_pd(r, t));
  t = _mm256_sub_pd(v_set1(kPsi1), _mm256_mul_pd(r, t));
  const __m256d lead = _mm256_sub_pd(
      _mm256_sub_pd(v_log(x), _mm256_mul_pd(v_set1(0.5), inv)),
      _mm256_mul_pd(r, t));
  return _mm256_add_pd(lead, acc);
}

void a_digamma_array(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, v_digamma(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = digamma_positive(x[i]);
}

double a_sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum_tree(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double a_max(const double* x, std::size_t n) {
  std::size_t i = 0;
  double m = x[0];
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4)
      vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    const __m128d lo = _mm256_castpd256_pd128(vm);
    const __m128d hi = _mm256_extractf128_pd(vm, 1);
    const __m128d m2 = _mm_max_pd(lo, hi);
    m = _mm_cvtsd_f64(_mm_max_sd(m2, _mm_unpackhi_pd(m2, m2)));
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double a_dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(
        acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  double s = hsum_tree(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void a_axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = v_set1(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        y + i, _mm256_add_pd(_mm256_loadu_pd(y + i),
                             _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) y[i] += a * x[i];
}

void a_scale(double* x, double a, std::size_t n) {
  const __m256d va = v_set1(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
  for (; i < n; ++i) x[i] *= a;
}

void a_add_const(double* x, double c, std::size_t n) {
  const __m256d vc = v_set1(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_add_pd(_mm256_loadu_pd(x + i), vc));
  for (; i < n; ++i) x[i] += c;
}

void a_add2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void a_add3(const double* a, const double* b, const double* c, double* out,
            std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        out + i,
        _mm256_add_pd(_mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)),
                      _mm256_loadu_pd(c + i)));
  for (; i < n; ++i) out[i] = (a[i] + b[i]) + c[i];
}

double a_exp_normalize(double* x, std::size_t n) {
  const double m = a_max(x, n);
  const __m256d vm = v_set1(m);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, v_exp(_mm256_sub_pd(_mm256_loadu_pd(x + i), vm)));
  for (; i < n; ++i) x[i] = exp_any(x[i] - m);
  const double z = a_sum(x, n);
  a_scale(x, 1.0 / z, n);
  return z;
}

constexpr Backend kAvx2 = {
    "avx2",  a_digamma_array, a_sum,  a_max,  a_dot,
    a_axpy,  a_scale,         a_add_const, a_add2, a_add3,
    a_exp_normalize,
};

}  // namespace

const Backend& avx2_backend() { return kAvx2; }

}  // namespace bbm::kernels

#else  // !__AVX2__

namespace bbm::kernels {

const Backend& avx2_backend() {
  throw std::runtime_error("AVX2 backend not compiled in");
}

}  // namespace bbm::kernels

#endif
