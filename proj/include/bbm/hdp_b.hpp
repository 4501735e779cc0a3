#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bbm/corpus.hpp"
#include "bbm/lda_b.hpp"

namespace bbm {

/**
 * HDP-B global state: K truncated corpus topics with Dirichlet parameters
 * lambda, plus Beta parameters (a, b) for the corpus stick proportions v_k.
 * T truncates the per-document stick-breaking.
 */
struct HdpBModel {
  std::int32_t K = 0;  // corpus truncation
  std::int32_t T = 0;  // document truncation, T <= K
  std::int32_t V = 0;
  double omega = 1.0;  // corpus concentration
  double alpha = 1.0;  // document concentration
  double eta = 0.01;   // topic-word prior
  std::vector<double> lambda;  // K*V row-major, all > 0
  std::vector<double> a;       // K, all > 0
  std::vector<double> b;       // K, all > 0

  double* row(std::int32_t k) {
    return lambda.data() + static_cast<std::size_t>(k) * V;
  }
  const double* row(std::int32_t k) const {
    return lambda.data() + static_cast<std::size_t>(k) * V;
  }
};

// lambda_kv = eta + u with u ~ Uniform(0,1), a_k = 1, b_k = omega.
HdpBModel hdp_init_model(std::int32_t K, std::int32_t T, std::int32_t V,
                         double omega, double alpha, double eta,
                         std::uint64_t seed);

/** Per-document variational state for HDP-B. */
struct HdpLocalState {
  std::vector<double> zeta;       // T*K row-major, rows sum to 1
  std::vector<double> phi;        // terms.size() x T, rows sum to 1
  std::vector<double> phi_tilde;  // biterms.size() x T, rows sum to 1
  std::vector<double> gamma1;     // T
  std::vector<double> gamma2;     // T
  int iterations = 0;
  bool converged = false;
};

/**
 * E[log sigma_i] for stick-breaking proportions with Beta(g1_i, g2_i)
 * posteriors: E[log pi_i] + sum_{j<i} E[log(1-pi_j)]. With force_last the
 * final stick is pinned to 1 (E[log pi_last] = 0), closing sigma into a
 * distribution over the truncated indices. Rejects nonpositive parameters.
 */
std::vector<double> stick_expectations(std::span<const double> g1,
                                       std::span<const double> g2,
                                       bool force_last = true);

// E[sigma_i] from the Beta means E[v_i] = g1/(g1+g2); with force_last the
// last stick absorbs all remaining mass, so the result sums to 1 exactly.
std::vector<double> stick_mean(std::span<const double> g1,
                               std::span<const double> g2,
                               bool force_last = true);

/**
 * Local variational step for one document: initializes zeta from the summed
 * word/biterm log-likelihoods alone, phi and phi~ from the zeta-weighted
 * likelihoods (no stick terms on the first pass), then cycles
 * gamma -> zeta -> phi -> phi~ until the mean absolute zeta change drops
 * below tol or max_iters is hit. max_iters = 0 leaves the pure
 * initialization. Requires a nonempty document.
 */
HdpLocalState hdp_local_step(const BobDocument& doc, const HdpBModel& model,
                             const TopicExpectations& expect,
                             std::span<const double> elog_sigma_v,
                             double tol = 1e-3, int max_iters = 100,
                             std::int64_t doc_id = -1);
HdpLocalState hdp_local_step(const BobDocument& doc, const HdpBModel& model,
                             double tol = 1e-3, int max_iters = 100,
                             std::int64_t doc_id = -1);

// E[log beta] for the HDP topics, same transposed layout as LDA-B.
TopicExpectations hdp_topic_expectations(const HdpBModel& model);

// Parallel hdp_local_step over a minibatch; identical for any worker count.
std::vector<HdpLocalState> run_hdp_locals(std::span<const BobDocument> docs,
                                          const HdpBModel& model, double tol,
                                          int max_iters, int workers);

/**
 * Natural-gradient global update from a minibatch of converged locals:
 *   lambda^_kv = eta  + (D/|C|) sum_d sum_i zeta_di^k f(v, phi, phi~)
 *   a^_k      = 1     + (D/|C|) sum_d sum_i zeta_di^k
 *   b^_k      = omega + (D/|C|) sum_d sum_i sum_{l>k} zeta_di^l
 * then (lambda, a, b) <- (1-rho) old + rho hat. rho in [0, 1]; rho = 0 is a
 * no-op.
 */
void hdp_global_update(HdpBModel& model, std::span<const BobDocument> docs,
                       std::span<const HdpLocalState> locals, double D,
                       double rho);

struct HdpSviConfig {
  std::int32_t K = 100;
  std::int32_t T = 20;
  std::int32_t V = 0;  // vocabulary size, required
  double omega = 1.0;
  double alpha = 1.0;
  double eta = 0.01;
  double tau = 1.0;
  double kappa = 0.9;
  std::size_t batch_size = 5000;
  double D = 0.0;  // 0 -> use the stream length
  std::uint64_t seed = 0;
  int epochs = 1;
  double local_tol = 1e-3;
  int local_max_iters = 100;
  int workers = 1;
};

/**
 * SVI driver: sweeps the documents in order, one global update per
 * minibatch, rho_t from the shared schedule with t counted from 1.
 * `on_step(t, rho, docs_seen, model)` fires after each update when set.
 */
using HdpStepCallback =
    std::function<void(std::int64_t, double, std::size_t, const HdpBModel&)>;
HdpBModel hdp_svi(std::span<const BobDocument> docs, const HdpSviConfig& config,
                  const HdpStepCallback& on_step = nullptr);

// Per-document lower-bound contribution (document sticks, topic indices,
// assignments, and likelihood terms); nondecreasing over local iterations.
double hdp_document_elbo(const BobDocument& doc, const HdpBModel& model,
                         const TopicExpectations& expect,
                         std::span<const double> elog_sigma_v,
                         const HdpLocalState& local);

// Checkpoint: header `K T omega alpha eta`, the lambda matrix (V inferred
// from the first row), then a and b rows; same numeric encoding as LDA-B.
void save_checkpoint(const HdpBModel& model, const std::string& path);
HdpBModel load_hdp_checkpoint(const std::string& path);

}  // namespace bbm
