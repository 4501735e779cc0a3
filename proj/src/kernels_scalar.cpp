#include "bbm/kernels.hpp"

#include "kernels_detail.hpp"

// Scalar reference backend. Reductions use four independent accumulators
// combined as (a0+a2)+(a1+a3) — the same tree the AVX2 horizontal sum
// produces — so both backends round identically.

namespace bbm::kernels {
namespace {

using namespace detail;

void s_digamma_array(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = digamma_positive(x[i]);
}

double s_sum(const double* x, std::size_t n) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += x[i];
    a1 += x[i + 1];
    a2 += x[i + 2];
    a3 += x[i + 3];
  }
  double s = (a0 + a2) + (a1 + a3);
  for (; i < n; ++i) s += x[i];
  return s;
}

double s_max(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double s_dot(const double* x, const double* y, std::size_t n) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += x[i] * y[i];
    a1 += x[i + 1] * y[i + 1];
    a2 += x[i + 2] * y[i + 2];
    a3 += x[i + 3] * y[i + 3];
  }
  double s = (a0 + a2) + (a1 + a3);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void s_axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_scale(double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void s_add_const(double* x, double c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] += c;
}

void s_add2(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_add3(const double* a, const double* b, const double* c, double* out,
            std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (a[i] + b[i]) + c[i];
}

double s_exp_normalize(double* x, std::size_t n) {
  const double m = s_max(x, n);
  for (std::size_t i = 0; i < n; ++i) x[i] = exp_any(x[i] - m);
  const double z = s_sum(x, n);
  const double inv = 1.0 / z;
  s_scale(x, inv, n);
  return z;
}

constexpr Backend kScalar = {
    "scalar",    s_digamma_array, s_sum,  s_max,  s_dot,
    s_axpy,      s_scale,         s_add_const, s_add2, s_add3,
    s_exp_normalize,
};

}  // namespace

const Backend& scalar_backend() { return kScalar; }

double digamma(double x) { return detail::digamma_positive(x); }

}  // namespace bbm::kernels
