#pragma once

// Shared constants and scalar reference routines for the kernel backends.
//
// The log/exp/digamma approximations below are written as explicit +,-,*,/
// sequences so the AVX2 backend can replay exactly the same operations lane
// by lane. Compiled with -ffp-contract=off, both backends then agree bit for
// bit, which is what the kernel equivalence tests pin down.

#include <bit>
#include <cstdint>

namespace bbm::kernels::detail {

// ---- log -------------------------------------------------------------------
// log(x) for normal positive x: split x = m * 2^e with m in (sqrt2/2, sqrt2],
// then log(m) = 2 atanh(z), z = (m-1)/(m+1), via a 12-term odd series.
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;  // 20 low bits zero
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kSqrt2 = 1.41421356237309504880;

inline double log_positive(double x) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  double e = static_cast<double>(static_cast<int>((bits >> 52) & 0x7FF) - 1023);
  double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFULL) |
                                   0x3FF0000000000000ULL);  // m in [1, 2)
  if (m > kSqrt2) {
    m = m * 0.5;
    e = e + 1.0;
  }
  const double z = (m - 1.0) / (m + 1.0);
  const double s = z * z;
  double p = 1.0 / 23.0;
  p = p * s + 1.0 / 21.0;
  p = p * s + 1.0 / 19.0;
  p = p * s + 1.0 / 17.0;
  p = p * s + 1.0 / 15.0;
  p = p * s + 1.0 / 13.0;
  p = p * s + 1.0 / 11.0;
  p = p * s + 1.0 / 9.0;
  p = p * s + 1.0 / 7.0;
  p = p * s + 1.0 / 5.0;
  p = p * s + 1.0 / 3.0;
  const double r = 2.0 * z + 2.0 * z * s * p;
  return e * kLn2Hi + (r + e * kLn2Lo);
}

// ---- exp -------------------------------------------------------------------
// Cephes-style exp: n = floor(x*log2(e) + 0.5), r = x - n*ln2 (split), then a
// rational approximation on r and an exact scale by 2^n. Inputs below
// kExpUnderflow flush to zero; callers never exceed the overflow range.
inline constexpr double kLog2E = 1.44269504088896340736;
inline constexpr double kExpC1 = 6.93145751953125e-01;
inline constexpr double kExpC2 = 1.42860682030941723212e-06;
inline constexpr double kExpUnderflow = -708.0;

inline constexpr double kExpP0 = 1.26177193074810590878e-04;
inline constexpr double kExpP1 = 3.02994407707441961300e-02;
inline constexpr double kExpP2 = 9.99999999999999999910e-01;
inline constexpr double kExpQ0 = 3.00198505138664455042e-06;
inline constexpr double kExpQ1 = 2.52448340349684104192e-03;
inline constexpr double kExpQ2 = 2.27265548208155028766e-01;
inline constexpr double kExpQ3 = 2.00000000000000000005e+00;

inline double floor_double(double x) {
  // Mirrors _mm256_floor_pd; inputs here are small enough for i64 conversion.
  const double t = static_cast<double>(static_cast<std::int64_t>(x));
  return (t > x) ? t - 1.0 : t;
}

inline double exp_any(double x) {
  if (x < kExpUnderflow) return 0.0;
  const double n = floor_double(kLog2E * x + 0.5);
  double r = x - n * kExpC1;
  r = r - n * kExpC2;
  const double rr = r * r;
  const double p = r * ((kExpP0 * rr + kExpP1) * rr + kExpP2);
  const double q = ((kExpQ0 * rr + kExpQ1) * rr + kExpQ2) * rr + kExpQ3;
  double y = p / (q - p);
  y = 1.0 + 2.0 * y;
  // Exact scale by 2^n via exponent bits; n is in [-1021, 1024) here.
  const std::uint64_t pow2 =
      static_cast<std::uint64_t>(static_cast<std::int64_t>(n) + 1023) << 52;
  return y * std::bit_cast<double>(pow2);
}

// ---- digamma ---------------------------------------------------------------
// psi(x) for x > 0: at most 8 recurrence shifts psi(x) = psi(x+1) - 1/x move
// the argument to >= 8 (any positive x lands in [8, 16) after 8 shifts), then
// the asymptotic series to 1/x^14 is accurate to ~1e-15.
inline constexpr double kPsi1 = 1.0 / 12.0;
inline constexpr double kPsi2 = 1.0 / 120.0;
inline constexpr double kPsi3 = 1.0 / 252.0;
inline constexpr double kPsi4 = 1.0 / 240.0;
inline constexpr double kPsi5 = 1.0 / 132.0;
inline constexpr double kPsi6 = 691.0 / 32760.0;
inline constexpr double kPsi7 = 1.0 / 12.0;

inline double digamma_positive(double x) {
  double acc = 0.0;
  for (int it = 0; it < 8; ++it) {
    if (x < 8.0) {
      acc = acc - 1.0 / x;
      x = x + 1.0;
    }
  }
  const double inv = 1.0 / x;
  const double r = inv * inv;
  double t = kPsi6 - r * kPsi7;
  t = kPsi5 - r * t;
  t = kPsi4 - r * t;
  t = kPsi3 - r * t;
  t = kPsi2 - r * t;
  t = kPsi1 - r * t;
  const double lead = log_positive(x) - 0.5 * inv - r * t;
  return lead + acc;
}

}  // namespace bbm::kernels::detail
