#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "bbm/kernels.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using bbm::kernels::avx2_backend;
using bbm::kernels::avx2_supported;
using bbm::kernels::Backend;
using bbm::kernels::scalar_backend;

namespace {

// Positive values with the dynamic range the models actually feed in:
// Dirichlet parameters from ~1e-2 up to ~1e4.
std::vector<double> random_positive(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> expo(-2.0, 4.0);
  std::vector<double> v(n);
  for (auto& x : v) x = std::pow(10.0, expo(gen));
  return v;
}

std::vector<double> random_signed(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-30.0, 5.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 100, 1000};

}  // namespace

TEST_CASE("digamma matches high-precision anchors") {
  const struct {
    double x, psi;
  } anchors[] = {
      {0.01, -100.5608854578686745},   {0.25, -4.2274535333762654081},
      {0.5, -1.9635100260214234794},   {1.0, -0.57721566490153286061},
      {2.5, 0.70315664064524318723},   {3.75, 1.1825373886117962286},
      {8.0, 2.0156414779556099965},    {42.5, 3.7376932365000936171},
      {1234.5678, 7.1180711735895709103},
  };
  for (const auto& a : anchors) {
    const double got = bbm::kernels::digamma(a.x);
    CHECK(std::abs(got - a.psi) <= 1e-13 * std::abs(a.psi));
  }
}

TEST_CASE("digamma matches the finite-difference oracle on random inputs") {
  auto xs = random_positive(500, 11);
  for (double x : xs) {
    const double got = bbm::kernels::digamma(x);
    const double want = oracle::digamma(x);
    CHECK(std::abs(got - want) <= 1e-8 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("digamma recurrence psi(x+1) = psi(x) + 1/x") {
  for (double x : {0.02, 0.3, 1.7, 5.5, 9.25, 123.0}) {
    const double lhs = bbm::kernels::digamma(x + 1.0);
    const double rhs = bbm::kernels::digamma(x) + 1.0 / x;
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("scalar reductions match plain references") {
  const auto& sc = scalar_backend();
  for (std::size_t n : kSizes) {
    auto x = random_positive(n, 100 + n);
    auto y = random_positive(n, 200 + n);
    long double s = 0.0L, d = 0.0L;
    double mx = x[0];
    for (std::size_t i = 0; i < n; ++i) {
      s += x[i];
      d += (long double)x[i] * y[i];
      mx = std::max(mx, x[i]);
    }
    CHECK(sc.sum(x.data(), n) == doctest::Approx((double)s).epsilon(1e-12));
    CHECK(sc.dot(x.data(), y.data(), n) == doctest::Approx((double)d).epsilon(1e-12));
    CHECK(sc.max(x.data(), n) == mx);
  }
}

TEST_CASE("scalar exp_normalize matches std::exp softmax") {
  const auto& sc = scalar_backend();
  for (std::size_t n : kSizes) {
    auto x = random_signed(n, 300 + n);
    auto want = oracle::softmax(x);
    auto got = x;
    sc.exp_normalize(got.data(), n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(got[i] - want[i]) <= 1e-13);
      sum += got[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("exp_normalize flushes extreme negatives to zero without NaN") {
  const auto& sc = scalar_backend();
  std::vector<double> x = {0.0, -800.0, -5.0, -1e9};
  sc.exp_normalize(x.data(), x.size());
  CHECK(x[1] == 0.0);
  CHECK(x[3] == 0.0);
  CHECK(std::isfinite(x[0]));
  CHECK(x[0] > 0.9);
}

TEST_CASE("elementwise kernels match hand loops") {
  const auto& sc = scalar_backend();
  auto a = random_positive(37, 1);
  auto b = random_positive(37, 2);
  auto c = random_positive(37, 3);

  std::vector<double> out(37), want(37);
  sc.add2(a.data(), b.data(), out.data(), 37);
  for (int i = 0; i < 37; ++i) CHECK(out[i] == a[i] + b[i]);

  sc.add3(a.data(), b.data(), c.data(), out.data(), 37);
  for (int i = 0; i < 37; ++i) CHECK(out[i] == (a[i] + b[i]) + c[i]);

  auto y = b;
  sc.axpy(1.75, a.data(), y.data(), 37);
  for (int i = 0; i < 37; ++i) CHECK(y[i] == b[i] + 1.75 * a[i]);

  auto z = a;
  sc.scale(z.data(), 0.5, 37);
  for (int i = 0; i < 37; ++i) CHECK(z[i] == a[i] * 0.5);

  auto w = a;
  sc.add_const(w.data(), -0.125, 37);
  for (int i = 0; i < 37; ++i) CHECK(w[i] == a[i] - 0.125);
}

TEST_CASE("AVX2 backend agrees with the scalar backend bit for bit") {
  if (!avx2_supported()) {
    MESSAGE("AVX2 unavailable; skipping equivalence checks");
    return;
  }
  const auto& sc = scalar_backend();
  const auto& vx = avx2_backend();

  for (std::size_t n : kSizes) {
    auto x = random_positive(n, 400 + n);
    auto y = random_positive(n, 500 + n);

    std::vector<double> d_s(n), d_v(n);
    sc.digamma_array(x.data(), d_s.data(), n);
    vx.digamma_array(x.data(), d_v.data(), n);
    CHECK(std::memcmp(d_s.data(), d_v.data(), n * sizeof(double)) == 0);

    CHECK(sc.sum(x.data(), n) == vx.sum(x.data(), n));
    CHECK(sc.max(x.data(), n) == vx.max(x.data(), n));
    CHECK(sc.dot(x.data(), y.data(), n) == vx.dot(x.data(), y.data(), n));

    auto y1 = y, y2 = y;
    sc.axpy(-2.5, x.data(), y1.data(), n);
    vx.axpy(-2.5, x.data(), y2.data(), n);
    CHECK(std::memcmp(y1.data(), y2.data(), n * sizeof(double)) == 0);

    auto s1 = x, s2 = x;
    sc.scale(s1.data(), 1.0 / 3.0, n);
    vx.scale(s2.data(), 1.0 / 3.0, n);
    CHECK(std::memcmp(s1.data(), s2.data(), n * sizeof(double)) == 0);

    auto c1 = x, c2 = x;
    sc.add_const(c1.data(), 0.7, n);
    vx.add_const(c2.data(), 0.7, n);
    CHECK(std::memcmp(c1.data(), c2.data(), n * sizeof(double)) == 0);

    std::vector<double> o1(n), o2(n);
    sc.add2(x.data(), y.data(), o1.data(), n);
    vx.add2(x.data(), y.data(), o2.data(), n);
    CHECK(std::memcmp(o1.data(), o2.data(), n * sizeof(double)) == 0);

    sc.add3(x.data(), y.data(), d_s.data(), o1.data(), n);
    vx.add3(x.data(), y.data(), d_s.data(), o2.data(), n);
    CHECK(std::memcmp(o1.data(), o2.data(), n * sizeof(double)) == 0);

    auto e1 = random_signed(n, 600 + n);
    auto e2 = e1;
    const double z1 = sc.exp_normalize(e1.data(), n);
    const double z2 = vx.exp_normalize(e2.data(), n);
    CHECK(z1 == z2);
    CHECK(std::memcmp(e1.data(), e2.data(), n * sizeof(double)) == 0);
  }
}

TEST_CASE("backend selection") {
  bbm::kernels::set_backend("scalar");
  CHECK(std::strcmp(bbm::kernels::active().name, "scalar") == 0);
  if (avx2_supported()) {
    bbm::kernels::set_backend("avx2");
    CHECK(std::strcmp(bbm::kernels::active().name, "avx2") == 0);
  }
  bbm::kernels::set_backend("auto");
  CHECK_THROWS_AS(bbm::kernels::set_backend("mmx"), std::invalid_argument);
}
