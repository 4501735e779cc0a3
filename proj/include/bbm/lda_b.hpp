#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bbm/corpus.hpp"

namespace bbm {

/**
 * LDA-B global state: Dirichlet parameters lambda over topic-word
 * distributions, the document-topic prior alpha, and the topic-word prior eta
 * (a broadcast scalar, or a full K x V matrix for embedding-derived priors).
 */
struct LdaBModel {
  std::int32_t K = 0;
  std::int32_t V = 0;
  std::vector<double> alpha;       // K entries, all > 0
  std::vector<double> lambda;      // K*V row-major, all > 0
  double eta_scalar = 0.01;
  std::vector<double> eta_matrix;  // empty, or K*V overriding the scalar

  double eta(std::int32_t k, std::int32_t v) const {
    return eta_matrix.empty()
               ? eta_scalar
               : eta_matrix[static_cast<std::size_t>(k) * V + v];
  }
  double* row(std::int32_t k) {
    return lambda.data() + static_cast<std::size_t>(k) * V;
  }
  const double* row(std::int32_t k) const {
    return lambda.data() + static_cast<std::size_t>(k) * V;
  }
};

// lambda_kv = eta + u with u ~ Uniform(0,1) per entry, seeded. Rejects
// nonpositive hyperparameters.
LdaBModel init_model(std::int32_t K, std::int32_t V, double alpha, double eta,
                     std::uint64_t seed);

/**
 * E_q[log beta] = psi(lambda_kv) - psi(sum_v lambda_kv), stored transposed
 * (V rows of K) so the per-token topic vectors inference reads are
 * contiguous.
 */
struct TopicExpectations {
  std::int32_t K = 0;
  std::int32_t V = 0;
  std::vector<double> elogbeta_t;  // V*K

  const double* word(std::int32_t v) const {
    return elogbeta_t.data() + static_cast<std::size_t>(v) * K;
  }
};
TopicExpectations topic_expectations(const LdaBModel& model);

/** Per-document variational state produced by LocalVB. */
struct LocalState {
  std::vector<double> gamma;      // K
  std::vector<double> phi;        // terms.size() x K, rows sum to 1
  std::vector<double> phi_tilde;  // biterms.size() x K, rows sum to 1
  int iterations = 0;
  bool converged = false;
};

// Single coordinate updates, exposed for tests and composition. Each returns
// row-normalized responsibilities; phi_tilde rows are symmetric in the two
// words of the biterm.
std::vector<double> update_phi(const BobDocument& doc, const LdaBModel& model,
                               const std::vector<double>& gamma);
std::vector<double> update_phi_tilde(const BobDocument& doc,
                                     const LdaBModel& model,
                                     const std::vector<double>& gamma);
// gamma_k = alpha_k + sum_n n_dn phi_nk + sum_b 2 m_db phi~_bk
std::vector<double> update_gamma(const BobDocument& doc, const LdaBModel& model,
                                 const std::vector<double>& phi,
                                 const std::vector<double>& phi_tilde);

/**
 * LocalVB coordinate ascent: from gamma_k = alpha_k + (N+M)/K, cycle
 * phi -> phi~ -> gamma until the mean absolute gamma change per component
 * drops below tol or max_iters is hit. doc_id only labels numeric errors.
 */
LocalState local_vb(const BobDocument& doc, const LdaBModel& model,
                    const TopicExpectations& expect, double tol = 1e-3,
                    int max_iters = 100, std::int64_t doc_id = -1);
LocalState local_vb(const BobDocument& doc, const LdaBModel& model,
                    double tol = 1e-3, int max_iters = 100,
                    std::int64_t doc_id = -1);

/**
 * K x V matrix of f(v, phi, phi~) sums over the minibatch:
 * entry (k,v) = sum_d [ sum_n 1{w_dn=v} n_dn phi_dnk
 *                     + sum_b (1{w1=v} + 1{w2=v}) 2 m_db phi~_dbk ].
 */
std::vector<double> sufficient_stats(std::span<const BobDocument> docs,
                                     std::span<const LocalState> locals,
                                     std::int32_t K, std::int32_t V);

/**
 * Per-document part of the variational lower bound (eight expectation
 * terms: word and biterm likelihoods, their assignment priors and
 * entropies, and the theta prior/entropy pair). The two global beta terms
 * live in global_beta_elbo; corpus_elbo adds them once over a doc set.
 */
double document_elbo(const BobDocument& doc, const LdaBModel& model,
                     const LocalState& local);
double document_elbo(const BobDocument& doc, const LdaBModel& model,
                     const TopicExpectations& expect, const LocalState& local);
double global_beta_elbo(const LdaBModel& model);
double corpus_elbo(std::span<const BobDocument> docs, const LdaBModel& model,
                   std::span<const LocalState> locals);

// Checkpoint: header `K V alpha eta`, then K rows of V tab-separated values
// at 17 significant digits (exact double round-trip). Vector-alpha models
// persist alpha[0]; matrix priors are not stored.
void save_checkpoint(const LdaBModel& model, const std::string& path);
LdaBModel load_lda_checkpoint(const std::string& path);

}  // namespace bbm
