#include "bbm/lda_b.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bbm/kernels.hpp"
#include "bbm/rng.hpp"

namespace bbm {

namespace {

// E[log theta] for Dirichlet(gamma), written into out (K entries).
void elog_dirichlet(const std::vector<double>& gamma, double* out) {
  const auto& ker = kernels::active();
  const std::size_t k = gamma.size();
  ker.digamma_array(gamma.data(), out, k);
  ker.add_const(out, -kernels::digamma(ker.sum(gamma.data(), k)), k);
}

void check_finite(const double* x, std::size_t n, std::int64_t doc_id,
                  const char* what) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) {
      std::ostringstream msg;
      msg << "non-finite " << what << " while inferring document " << doc_id;
      throw std::runtime_error(msg.str());
    }
  }
}

// One phi pass: rows[i] = normalize(exp(elogtheta + elogbeta[w_i])).
void phi_pass(const BobDocument& doc, const TopicExpectations& expect,
              const double* elogtheta, double* phi) {
  const auto& ker = kernels::active();
  const std::int32_t k = expect.K;
  for (std::size_t i = 0; i < doc.terms.size(); ++i) {
    double* row = phi + i * k;
    ker.add2(elogtheta, expect.word(doc.terms[i].first), row, k);
    ker.exp_normalize(row, k);
  }
}

// One phi~ pass: rows[b] = normalize(exp(elogtheta + elogbeta[w1] + elogbeta[w2])).
// The word vectors are added to each other first so the row comes out
// bit-identical when the biterm's two words are stored in either order.
void phi_tilde_pass(const BobDocument& doc, const TopicExpectations& expect,
                    const double* elogtheta, double* phi_tilde) {
  const auto& ker = kernels::active();
  const std::int32_t k = expect.K;
  for (std::size_t b = 0; b < doc.biterms.size(); ++b) {
    double* row = phi_tilde + b * k;
    ker.add3(expect.word(doc.biterms[b].w1), expect.word(doc.biterms[b].w2),
             elogtheta, row, k);
    ker.exp_normalize(row, k);
  }
}

// gamma = alpha + sum_n n phi_n + sum_b 2 m phi~_b
void gamma_pass(const BobDocument& doc, const std::vector<double>& alpha,
                const double* phi, const double* phi_tilde, double* gamma) {
  const auto& ker = kernels::active();
  const std::size_t k = alpha.size();
  for (std::size_t i = 0; i < k; ++i) gamma[i] = alpha[i];
  for (std::size_t i = 0; i < doc.terms.size(); ++i)
    ker.axpy(static_cast<double>(doc.terms[i].second), phi + i * k, gamma, k);
  for (std::size_t b = 0; b < doc.biterms.size(); ++b)
    ker.axpy(2.0 * static_cast<double>(doc.biterms[b].m), phi_tilde + b * k,
             gamma, k);
}

double entropy_term(const double* row, std::size_t k) {
  double h = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    if (row[i] > 0.0) h += row[i] * std::log(row[i]);
  return h;
}

}  // namespace

LdaBModel init_model(std::int32_t K, std::int32_t V, double alpha, double eta,
                     std::uint64_t seed) {
  if (K < 1 || V < 1)
    throw std::invalid_argument("init_model: K and V must be >= 1");
  if (!(alpha > 0.0) || !(eta > 0.0))
    throw std::invalid_argument("init_model: alpha and eta must be positive");
  LdaBModel model;
  model.K = K;
  model.V = V;
  model.alpha.assign(K, alpha);
  model.eta_scalar = eta;
  model.lambda.resize(static_cast<std::size_t>(K) * V);
  Rng rng(seed);
  for (auto& x : model.lambda) x = eta + rng.uniform01();
  return model;
}

TopicExpectations topic_expectations(const LdaBModel& model) {
  const auto& ker = kernels::active();
  TopicExpectations expect;
  expect.K = model.K;
  expect.V = model.V;
  expect.elogbeta_t.resize(model.lambda.size());
  std::vector<double> tmp(model.V);
  for (std::int32_t k = 0; k < model.K; ++k) {
    const double* row = model.row(k);
    ker.digamma_array(row, tmp.data(), model.V);
    const double psi_total = kernels::digamma(ker.sum(row, model.V));
    for (std::int32_t v = 0; v < model.V; ++v)
      expect.elogbeta_t[static_cast<std::size_t>(v) * model.K + k] =
          tmp[v] - psi_total;
  }
  return expect;
}

std::vector<double> update_phi(const BobDocument& doc, const LdaBModel& model,
                               const std::vector<double>& gamma) {
  const TopicExpectations expect = topic_expectations(model);
  std::vector<double> elogtheta(model.K);
  elog_dirichlet(gamma, elogtheta.data());
  std::vector<double> phi(doc.terms.size() * model.K);
  phi_pass(doc, expect, elogtheta.data(), phi.data());
  return phi;
}

std::vector<double> update_phi_tilde(const BobDocument& doc,
                                     const LdaBModel& model,
                                     const std::vector<double>& gamma) {
  const TopicExpectations expect = topic_expectations(model);
  std::vector<double> elogtheta(model.K);
  elog_dirichlet(gamma, elogtheta.data());
  std::vector<double> phi_tilde(doc.biterms.size() * model.K);
  phi_tilde_pass(doc, expect, elogtheta.data(), phi_tilde.data());
  return phi_tilde;
}

std::vector<double> update_gamma(const BobDocument& doc, const LdaBModel& model,
                                 const std::vector<double>& phi,
                                 const std::vector<double>& phi_tilde) {
  std::vector<double> gamma(model.K);
  gamma_pass(doc, model.alpha, phi.data(), phi_tilde.data(), gamma.data());
  return gamma;
}

LocalState local_vb(const BobDocument& doc, const LdaBModel& model,
                    const TopicExpectations& expect, double tol, int max_iters,
                    std::int64_t doc_id) {
  const std::int32_t k = model.K;
  LocalState st;
  st.gamma.resize(k);
  const double even = static_cast<double>(doc.N + doc.M) / k;
  for (std::int32_t i = 0; i < k; ++i) st.gamma[i] = model.alpha[i] + even;
  st.phi.resize(doc.terms.size() * k);
  st.phi_tilde.resize(doc.biterms.size() * k);

  std::vector<double> elogtheta(k);
  std::vector<double> gamma_new(k);
  for (int it = 1; it <= max_iters; ++it) {
    st.iterations = it;
    elog_dirichlet(st.gamma, elogtheta.data());
    phi_pass(doc, expect, elogtheta.data(), st.phi.data());
    phi_tilde_pass(doc, expect, elogtheta.data(), st.phi_tilde.data());
    gamma_pass(doc, model.alpha, st.phi.data(), st.phi_tilde.data(),
               gamma_new.data());
    double delta = 0.0;
    for (std::int32_t i = 0; i < k; ++i)
      delta += std::abs(gamma_new[i] - st.gamma[i]);
    st.gamma.assign(gamma_new.begin(), gamma_new.end());
    check_finite(st.gamma.data(), st.gamma.size(), doc_id, "gamma");
    if (delta / k < tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

LocalState local_vb(const BobDocument& doc, const LdaBModel& model, double tol,
                    int max_iters, std::int64_t doc_id) {
  return local_vb(doc, model, topic_expectations(model), tol, max_iters,
                  doc_id);
}

std::vector<double> sufficient_stats(std::span<const BobDocument> docs,
                                     std::span<const LocalState> locals,
                                     std::int32_t K, std::int32_t V) {
  const auto& ker = kernels::active();
  // Accumulated transposed (V x K) so each token update is one contiguous
  // axpy; transposed back on return.
  std::vector<double> stats_t(static_cast<std::size_t>(V) * K, 0.0);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const BobDocument& doc = docs[d];
    const LocalState& st = locals[d];
    for (std::size_t i = 0; i < doc.terms.size(); ++i)
      ker.axpy(static_cast<double>(doc.terms[i].second),
               st.phi.data() + i * K,
               stats_t.data() + static_cast<std::size_t>(doc.terms[i].first) * K,
               K);
    for (std::size_t b = 0; b < doc.biterms.size(); ++b) {
      const auto& bt = doc.biterms[b];
      const double mult = 2.0 * static_cast<double>(bt.m);
      ker.axpy(mult, st.phi_tilde.data() + b * K,
               stats_t.data() + static_cast<std::size_t>(bt.w1) * K, K);
      ker.axpy(mult, st.phi_tilde.data() + b * K,
               stats_t.data() + static_cast<std::size_t>(bt.w2) * K, K);
    }
  }
  std::vector<double> stats(static_cast<std::size_t>(K) * V);
  for (std::int32_t v = 0; v < V; ++v)
    for (std::int32_t k = 0; k < K; ++k)
      stats[static_cast<std::size_t>(k) * V + v] =
          stats_t[static_cast<std::size_t>(v) * K + k];
  return stats;
}

double document_elbo(const BobDocument& doc, const LdaBModel& model,
                     const TopicExpectations& expect, const LocalState& local) {
  const auto& ker = kernels::active();
  const std::int32_t k = model.K;
  std::vector<double> elogtheta(k);
  elog_dirichlet(local.gamma, elogtheta.data());

  // E[log p(theta|alpha)] - E[log q(theta)]
  const double alpha_sum = ker.sum(model.alpha.data(), k);
  const double gamma_sum = ker.sum(local.gamma.data(), k);
  double elbo = std::lgamma(alpha_sum) - std::lgamma(gamma_sum);
  for (std::int32_t i = 0; i < k; ++i) {
    elbo += std::lgamma(local.gamma[i]) - std::lgamma(model.alpha[i]);
    elbo += (model.alpha[i] - local.gamma[i]) * elogtheta[i];
  }

  // Term plate: E[log p(w|z,beta)] + E[log p(z|theta)] - E[log q(z)].
  for (std::size_t i = 0; i < doc.terms.size(); ++i) {
    const double n = static_cast<double>(doc.terms[i].second);
    const double* row = local.phi.data() + i * k;
    elbo += n * ker.dot(row, expect.word(doc.terms[i].first), k);
    elbo += n * ker.dot(row, elogtheta.data(), k);
    elbo -= n * entropy_term(row, k);
  }
  // Biterm plate, with the ordered multiplicity 2m and both emitted words.
  for (std::size_t b = 0; b < doc.biterms.size(); ++b) {
    const auto& bt = doc.biterms[b];
    const double mult = 2.0 * static_cast<double>(bt.m);
    const double* row = local.phi_tilde.data() + b * k;
    elbo += mult * (ker.dot(row, expect.word(bt.w1), k) +
                    ker.dot(row, expect.word(bt.w2), k));
    elbo += mult * ker.dot(row, elogtheta.data(), k);
    elbo -= mult * entropy_term(row, k);
  }
  return elbo;
}

double document_elbo(const BobDocument& doc, const LdaBModel& model,
                     const LocalState& local) {
  return document_elbo(doc, model, topic_expectations(model), local);
}

double global_beta_elbo(const LdaBModel& model) {
  const auto& ker = kernels::active();
  double elbo = 0.0;
  std::vector<double> psi_row(model.V);
  for (std::int32_t k = 0; k < model.K; ++k) {
    const double* row = model.row(k);
    const double row_sum = ker.sum(row, model.V);
    const double psi_total = kernels::digamma(row_sum);
    ker.digamma_array(row, psi_row.data(), model.V);
    double eta_sum = 0.0;
    for (std::int32_t v = 0; v < model.V; ++v) {
      const double eta = model.eta(k, v);
      const double elog = psi_row[v] - psi_total;
      elbo += (eta - row[v]) * elog;
      elbo += std::lgamma(row[v]) - std::lgamma(eta);
      eta_sum += eta;
    }
    elbo += std::lgamma(eta_sum) - std::lgamma(row_sum);
  }
  return elbo;
}

double corpus_elbo(std::span<const BobDocument> docs, const LdaBModel& model,
                   std::span<const LocalState> locals) {
  const TopicExpectations expect = topic_expectations(model);
  double elbo = global_beta_elbo(model);
  for (std::size_t d = 0; d < docs.size(); ++d)
    elbo += document_elbo(docs[d], model, expect, locals[d]);
  return elbo;
}

void save_checkpoint(const LdaBModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.16e %.16e", model.alpha[0],
                model.eta_scalar);
  out << model.K << ' ' << model.V << ' ' << buf << '\n';
  for (std::int32_t k = 0; k < model.K; ++k) {
    const double* row = model.row(k);
    for (std::int32_t v = 0; v < model.V; ++v) {
      std::snprintf(buf, sizeof(buf), "%.16e", row[v]);
      if (v) out << '\t';
      out << buf;
    }
    out << '\n';
  }
}

LdaBModel load_lda_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("empty checkpoint " + path);
  std::istringstream hs(header);
  std::int64_t k = 0, v = 0;
  double alpha = 0.0, eta = 0.0;
  if (!(hs >> k >> v >> alpha >> eta) || k < 1 || v < 1)
    throw std::runtime_error("bad checkpoint header in " + path);
  std::string extra;
  if (hs >> extra)
    throw std::runtime_error("unexpected extra header field in " + path);
  LdaBModel model;
  model.K = static_cast<std::int32_t>(k);
  model.V = static_cast<std::int32_t>(v);
  model.alpha.assign(model.K, alpha);
  model.eta_scalar = eta;
  model.lambda.resize(static_cast<std::size_t>(k) * v);
  for (auto& x : model.lambda)
    if (!(in >> x)) throw std::runtime_error("truncated checkpoint " + path);
  return model;
}

}  // namespace bbm
