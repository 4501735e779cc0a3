#pragma once

// Independent reference implementations used only by tests. Everything here
// is written the dumb, obvious way (plain loops, library special functions,
// no shared code with src/) so the production kernels and update rules are
// checked against genuinely separate arithmetic.

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

// Digamma from its definition psi(x) = d/dx log Gamma(x), via Richardson-
// extrapolated central differences of std::lgamma. Accurate to ~1e-9 relative
// for x in (1e-3, 1e6) — good enough to pin the production digamma, which
// targets 1e-12.
inline double digamma(double x) {
  const double h = 1e-3 * x;  // proportional step keeps the h^4 term ~1e-12/x^2
  auto central = [&](double step) {
    return (std::lgamma(x + step) - std::lgamma(x - step)) / (2.0 * step);
  };
  const double d1 = central(h);
  const double d2 = central(h / 2.0);
  return (4.0 * d2 - d1) / 3.0;  // kills the O(h^2) error term
}

// E[log theta_k] for Dirichlet(gamma).
inline std::vector<double> dirichlet_elog(const std::vector<double>& g) {
  double total = 0.0;
  for (double v : g) total += v;
  std::vector<double> out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    out[k] = digamma(g[k]) - digamma(total);
  return out;
}

// Softmax of arbitrary scores, plain std::exp.
inline std::vector<double> softmax(const std::vector<double>& s) {
  double m = s[0];
  for (double v : s) m = std::max(m, v);
  std::vector<double> out(s.size());
  double z = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = std::exp(s[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

// Brute-force bag-of-biterms construction from a token-count map: every
// unordered pair of distinct word types, weighted min(f_i, f_j).
struct BrutePair {
  int w1, w2, m;
};
inline std::vector<BrutePair> brute_biterms(const std::map<int, int>& counts) {
  std::vector<BrutePair> out;
  for (auto i = counts.begin(); i != counts.end(); ++i) {
    auto j = i;
    for (++j; j != counts.end(); ++j) {
      out.push_back({i->first, j->first, std::min(i->second, j->second)});
    }
  }
  return out;
}

// Document-frequency counts for NPMI: docs given as word-id sets.
inline double npmi_pair(const std::vector<std::vector<int>>& docs, int wi,
                        int wj, double eps) {
  const double d = static_cast<double>(docs.size());
  double ci = 0, cj = 0, cij = 0;
  for (const auto& doc : docs) {
    bool hi = false, hj = false;
    for (int w : doc) {
      hi = hi || (w == wi);
      hj = hj || (w == wj);
    }
    ci += hi ? 1 : 0;
    cj += hj ? 1 : 0;
    cij += (hi && hj) ? 1 : 0;
  }
  const double pi = (ci + eps) / d, pj = (cj + eps) / d, pij = (cij + eps) / d;
  return std::log(pij / (pi * pj)) / (-std::log(pij));
}

}  // namespace oracle
