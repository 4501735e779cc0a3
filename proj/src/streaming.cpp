#include "bbm/streaming.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bbm/kernels.hpp"

namespace bbm {

double learning_rate(double tau, double kappa, std::int64_t t) {
  const double base = tau + static_cast<double>(t);
  if (!(base > 0.0)) {
    throw std::invalid_argument("learning_rate: tau + t must be positive");
  }
  return std::pow(base, -kappa);
}

PriorMatrix load_prior_embeddings(const std::string& path,
                                  const Vocabulary& vocab, std::int32_t K) {
  if (K <= 0) {
    throw std::invalid_argument("load_prior_embeddings: K must be positive");
  }
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open embedding file: " + path);
  }

  const std::int32_t v_size = static_cast<std::int32_t>(vocab.size());
  PriorMatrix prior;
  prior.K = K;
  prior.V = v_size;
  // Seed every column with the uniform fallback, then overwrite the words
  // that the file actually covers.
  prior.values.assign(static_cast<std::size_t>(K) * v_size, 1.0 / K);

  std::string line;
  std::vector<double> embed(static_cast<std::size_t>(K));
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word.empty()) continue;
    for (std::int32_t k = 0; k < K; ++k) {
      if (!(ss >> embed[k])) {
        throw std::runtime_error("embedding file line " +
                                 std::to_string(line_no) + ": expected " +
                                 std::to_string(K) + " values");
      }
    }
    double extra;
    if (ss >> extra) {
      throw std::runtime_error("embedding file line " +
                               std::to_string(line_no) + ": expected " +
                               std::to_string(K) + " values");
    }
    const std::int32_t v = vocab.id_of(word);
    if (v < 0) continue;  // word not in the vocabulary; nothing to place
    // Column v of the prior is softmax(embed).
    double mx = embed[0];
    for (std::int32_t k = 1; k < K; ++k) mx = std::max(mx, embed[k]);
    double z = 0.0;
    for (std::int32_t k = 0; k < K; ++k) z += std::exp(embed[k] - mx);
    for (std::int32_t k = 0; k < K; ++k) {
      prior.values[static_cast<std::size_t>(k) * v_size + v] =
          std::exp(embed[k] - mx) / z;
    }
  }
  return prior;
}

std::vector<LocalState> run_local_vb(std::span<const BobDocument> docs,
                                     const LdaBModel& model,
                                     const TopicExpectations& expect,
                                     double tol, int max_iters, int workers) {
  std::vector<LocalState> locals(docs.size());
  if (docs.empty()) return locals;
  if (workers < 1) workers = 1;
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(workers), docs.size());
  if (n_threads == 1) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      locals[i] = local_vb(docs[i], model, expect, tol, max_iters,
                           static_cast<std::int64_t>(i));
    }
    return locals;
  }
  // Each document is independent and lands in its own slot, so the result is
  // bit-identical no matter how the index range is carved up.
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t w = 0; w < n_threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= docs.size()) break;
        locals[i] = local_vb(docs[i], model, expect, tol, max_iters,
                             static_cast<std::int64_t>(i));
      }
    });
  }
  for (auto& th : pool) th.join();
  return locals;
}

namespace {

// Shared front half of every step: local inference plus statistics. Documents
// without terms cannot anchor any assignment, so they are skipped and tallied.
struct BatchResult {
  std::vector<double> stats;  // K*V row-major
  StepStats counts;
};

BatchResult batch_statistics(const LdaBModel& model,
                             std::span<const BobDocument> minibatch,
                             const LearnerConfig& config) {
  BatchResult out;
  std::vector<BobDocument> kept;
  kept.reserve(minibatch.size());
  for (const BobDocument& doc : minibatch) {
    if (doc.terms.empty()) {
      ++out.counts.skipped_empty;
    } else {
      kept.push_back(doc);
    }
  }
  out.counts.docs = kept.size();
  if (kept.empty()) {
    out.stats.assign(static_cast<std::size_t>(model.K) * model.V, 0.0);
    return out;
  }
  const TopicExpectations expect = topic_expectations(model);
  const std::vector<LocalState> locals =
      run_local_vb(kept, model, expect, config.local_tol,
                   config.local_max_iters, config.workers);
  out.stats = sufficient_stats(kept, locals, model.K, model.V);
  return out;
}

}  // namespace

StepStats svi_step(LdaBModel& model, std::span<const BobDocument> minibatch,
                   const LearnerConfig& config, std::int64_t t) {
  if (minibatch.empty()) {
    throw std::invalid_argument("svi_step: minibatch must not be empty");
  }
  if (!(config.D > 0.0)) {
    throw std::invalid_argument("svi_step: config.D must be positive");
  }
  const double rho = learning_rate(config.tau, config.kappa, t);
  const double scale = config.D / static_cast<double>(minibatch.size());
  BatchResult batch = batch_statistics(model, minibatch, config);

  const kernels::Backend& kb = kernels::active();
  std::vector<double> candidate(static_cast<std::size_t>(model.V));
  for (std::int32_t k = 0; k < model.K; ++k) {
    double* lam = model.row(k);
    const double* st = batch.stats.data() + static_cast<std::size_t>(k) * model.V;
    for (std::int32_t v = 0; v < model.V; ++v) {
      candidate[static_cast<std::size_t>(v)] = model.eta(k, v);
    }
    kb.axpy(scale, st, candidate.data(), static_cast<std::size_t>(model.V));
    kb.scale(lam, 1.0 - rho, static_cast<std::size_t>(model.V));
    kb.axpy(rho, candidate.data(), lam, static_cast<std::size_t>(model.V));
  }
  return batch.counts;
}

StepStats svb_step(LdaBModel& model, std::span<const BobDocument> minibatch,
                   const LearnerConfig& config) {
  BatchResult batch = batch_statistics(model, minibatch, config);
  if (batch.counts.docs > 0) {
    const kernels::Backend& kb = kernels::active();
    for (std::int32_t k = 0; k < model.K; ++k) {
      kb.axpy(1.0, batch.stats.data() + static_cast<std::size_t>(k) * model.V,
              model.row(k), static_cast<std::size_t>(model.V));
    }
  }
  return batch.counts;
}

StepStats kps_step(LdaBModel& model, std::span<const BobDocument> minibatch,
                   const PriorMatrix& prior, const LearnerConfig& config) {
  if (prior.values.empty()) {
    return kps_step(model, minibatch, prior.scalar, config);
  }
  if (prior.K != model.K || prior.V != model.V) {
    throw std::invalid_argument("kps_step: prior shape does not match model");
  }
  BatchResult batch = batch_statistics(model, minibatch, config);
  const bool have_stats = batch.counts.docs > 0;
  const kernels::Backend& kb = kernels::active();
  for (std::int32_t k = 0; k < model.K; ++k) {
    double* lam = model.row(k);
    const std::size_t off = static_cast<std::size_t>(k) * model.V;
    if (have_stats) {
      kb.axpy(1.0, batch.stats.data() + off, lam,
              static_cast<std::size_t>(model.V));
    }
    kb.axpy(1.0, prior.values.data() + off, lam,
            static_cast<std::size_t>(model.V));
  }
  return batch.counts;
}

StepStats kps_step(LdaBModel& model, std::span<const BobDocument> minibatch,
                   double eta, const LearnerConfig& config) {
  BatchResult batch = batch_statistics(model, minibatch, config);
  const bool have_stats = batch.counts.docs > 0;
  const kernels::Backend& kb = kernels::active();
  for (std::int32_t k = 0; k < model.K; ++k) {
    double* lam = model.row(k);
    if (have_stats) {
      kb.axpy(1.0, batch.stats.data() + static_cast<std::size_t>(k) * model.V,
              lam, static_cast<std::size_t>(model.V));
    }
    kb.add_const(lam, eta, static_cast<std::size_t>(model.V));
  }
  return batch.counts;
}

}  // namespace bbm
