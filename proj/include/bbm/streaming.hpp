#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bbm/corpus.hpp"
#include "bbm/lda_b.hpp"

namespace bbm {

enum class LearnerMode { svi, svb, kps };

struct LearnerConfig {
  LearnerMode mode = LearnerMode::svi;
  double tau = 1.0;            // delay, >= 0
  double kappa = 0.9;          // forgetting rate; (0.5, 1] for SVI
  std::size_t batch_size = 5000;
  double D = 0.0;              // corpus-size estimate for SVI scaling
  std::uint64_t seed = 0;
  double local_tol = 1e-3;
  int local_max_iters = 100;
  int workers = 1;
};

// rho_t = (tau + t)^-kappa; requires tau + t > 0. The training loop counts
// steps from t = 1 so that tau = 0 stays legal.
double learning_rate(double tau, double kappa, std::int64_t t);

/**
 * K x V prior built from word embeddings: column v is the softmax over the K
 * embedding dimensions of word v (missing words get the uniform column 1/K).
 * An empty `values` means a broadcast scalar instead.
 */
struct PriorMatrix {
  std::int32_t K = 0;
  std::int32_t V = 0;
  std::vector<double> values;  // K*V row-major, or empty
  double scalar = 0.0;

  double at(std::int32_t k, std::int32_t v) const {
    return values.empty() ? scalar
                          : values[static_cast<std::size_t>(k) * V + v];
  }
};

// Embedding file: `word v1 ... vK` per line, space-separated; rows must have
// exactly K values. Vocabulary words absent from the file get 1/K columns.
PriorMatrix load_prior_embeddings(const std::string& path,
                                  const Vocabulary& vocab, std::int32_t K);

struct StepStats {
  std::size_t docs = 0;           // documents contributing statistics
  std::size_t skipped_empty = 0;  // documents with no terms, skipped
};

/**
 * One SVI step (online regime): local inference on the minibatch, then
 * lambda~ = eta + (D/|C|) * stats and lambda <- (1-rho_t) lambda + rho_t
 * lambda~ with rho_t from the schedule.
 */
StepStats svi_step(LdaBModel& model, std::span<const BobDocument> minibatch,
                   const LearnerConfig& config, std::int64_t t);

// One SVB step (streaming regime): lambda <- lambda + stats. The minibatch
// posterior becomes the next prior; eta is never re-added.
StepStats svb_step(LdaBModel& model, std::span<const BobDocument> minibatch,
                   const LearnerConfig& config);

// One KPS step: lambda <- lambda + stats + eta, the prior re-added every
// minibatch. Matrix or scalar prior.
StepStats kps_step(LdaBModel& model, std::span<const BobDocument> minibatch,
                   const PriorMatrix& prior, const LearnerConfig& config);
StepStats kps_step(LdaBModel& model, std::span<const BobDocument> minibatch,
                   double eta, const LearnerConfig& config);

// Parallel per-document LocalVB over a minibatch (read-only model). Results
// are identical for any worker count; workers only split the doc range.
std::vector<LocalState> run_local_vb(std::span<const BobDocument> docs,
                                     const LdaBModel& model,
                                     const TopicExpectations& expect,
                                     double tol, int max_iters, int workers);

}  // namespace bbm
