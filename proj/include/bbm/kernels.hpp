#pragma once

#include <cstddef>

namespace bbm::kernels {

/**
 * Function table for the numeric inner loops shared by all models.
 *
 * Two implementations exist: a scalar reference and an AVX2 one. Both follow
 * the same operation sequence (same polynomial approximations, same reduction
 * tree, no FMA contraction), so for valid inputs they produce bit-identical
 * results; the unit tests assert that. Everything that touches per-topic
 * K-vectors or vocabulary-sized rows goes through this table.
 *
 * Preconditions (not checked here): digamma_array requires strictly positive
 * finite inputs; exp_normalize requires n >= 1 and finite inputs.
 */
struct Backend {
  const char* name;

  // out[i] = psi(x[i]); x[i] > 0 required.
  void (*digamma_array)(const double* x, double* out, std::size_t n);

  // Fixed-tree reduction sum of x[0..n).
  double (*sum)(const double* x, std::size_t n);

  // Maximum of x[0..n); n >= 1.
  double (*max)(const double* x, std::size_t n);

  // Fixed-tree reduction of sum x[i]*y[i].
  double (*dot)(const double* x, const double* y, std::size_t n);

  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  // x[i] *= a
  void (*scale)(double* x, double a, std::size_t n);

  // x[i] += c
  void (*add_const)(double* x, double c, std::size_t n);

  // out[i] = a[i] + b[i]
  void (*add2)(const double* a, const double* b, double* out, std::size_t n);

  // out[i] = a[i] + b[i] + c[i]  (evaluated as (a+b)+c)
  void (*add3)(const double* a, const double* b, const double* c, double* out,
               std::size_t n);

  // In place x[i] <- exp(x[i] - max(x)) / Z with Z = sum of the shifted
  // exponentials; returns Z. The usual log-space normalization step.
  double (*exp_normalize)(double* x, std::size_t n);
};

const Backend& scalar_backend();

// Only valid to call the function pointers if avx2_supported() is true.
const Backend& avx2_backend();

bool avx2_supported();

/**
 * Active backend for the process. Chosen on first use: AVX2 when the CPU has
 * it, scalar otherwise. The BBM_KERNELS environment variable ("scalar" or
 * "avx2") overrides auto-detection; set_backend() overrides both and is what
 * the equivalence tests use.
 */
const Backend& active();

// name: "auto", "scalar" or "avx2"; throws std::invalid_argument on other
// names and std::runtime_error if "avx2" is requested without CPU support.
void set_backend(const char* name);

// Scalar digamma, same algorithm as the array kernels. x > 0 required.
double digamma(double x);

}  // namespace bbm::kernels
