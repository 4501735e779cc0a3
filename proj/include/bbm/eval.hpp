#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bbm/corpus.hpp"
#include "bbm/hdp_b.hpp"
#include "bbm/lda_b.hpp"
#include "bbm/rng.hpp"

namespace bbm {

/** Token-level 4:1 split of one test document for predictive evaluation. */
struct HeldoutSplit {
  std::vector<std::int32_t> w1;  // observed part, sorted word ids
  std::vector<std::int32_t> w2;  // held-out part, sorted word ids
};

/**
 * Splits the document's expanded token multiset into w1/w2 at a 4:1 ratio:
 * |w1| = round(0.8 n) clamped to [1, n-1], membership chosen by shuffling
 * the tokens, so |w2| >= 1 always holds. Documents of length <= 4 are not
 * split (nullopt) and are skipped by evaluation.
 */
std::optional<HeldoutSplit> split_heldout(const Document& doc, Rng& rng);

/** Row-stochastic topic-word probabilities used for scoring. */
struct TopicWordDist {
  std::int32_t K = 0;
  std::int32_t V = 0;
  std::vector<double> p;  // K*V row-major, each row sums to 1

  const double* row(std::int32_t k) const {
    return p.data() + static_cast<std::size_t>(k) * V;
  }
};

// Expected topics from a trained model: normalized lambda rows.
TopicWordDist topics_from_lda(const LdaBModel& model);
TopicWordDist topics_from_hdp(const HdpBModel& model);

/**
 * Converts K distributions over a biterm vocabulary (word ids as the first V
 * entries, retained cross pairs after them, matching the feature-id layout
 * of export_features) into distributions over words: a word keeps its own
 * mass and collects half the mass of every cross pair containing it. Input
 * rows must sum to 1 (within 1e-6); the output rows then sum to 1 as well.
 */
TopicWordDist convert_topics(std::span<const double> biterm_topics,
                             std::int32_t K, const BitermVocabulary& bvocab);

struct LppOptions {
  std::uint64_t seed = 0;
  // Build w1's bag-of-biterms with cross pairs; false scores a plain
  // bag-of-words local step (the degenerate biterm-free path).
  bool use_biterms = true;
  double local_tol = 1e-3;
  int local_max_iters = 100;
  int workers = 1;
};

struct LppResult {
  double lpp = 0.0;               // mean per-document score; 0 if none scored
  std::size_t documents = 0;      // documents actually scored
  std::size_t skipped_short = 0;  // length <= 4, never split
  std::size_t skipped_empty = 0;  // w1 or w2 emptied by unseen-word dropping
  std::size_t dropped_words = 0;  // held-out tokens outside the training vocab
};

/**
 * Held-out log predictive probability. Each test document is split 4:1; the
 * model's local step runs on w1 to get document topic weights pi^, and the
 * score is mean_{w in w2} log sum_k p_kw pi^_k, averaged over documents.
 * The split for a document depends only on its content and options.seed, so
 * the result is invariant under test-document order and worker count.
 */
LppResult lpp(const TopicWordDist& topics, const LdaBModel& model,
              std::span<const Document> test_docs, const LppOptions& options = {});
LppResult lpp(const TopicWordDist& topics, const HdpBModel& model,
              std::span<const Document> test_docs, const LppOptions& options = {});

struct NpmiResult {
  std::vector<double> per_topic;  // mean pair score per topic
  double mean = 0.0;              // mean over topics
};

/**
 * Topic coherence over a reference corpus: for each topic's top_n words, the
 * mean over ordered pairs (i, j), i != j, of
 *   log(P(w_i, w_j) / (P(w_i) P(w_j))) / -log P(w_i, w_j)
 * with document-presence probabilities smoothed as (count + eps) / D.
 */
NpmiResult npmi(const TopicWordDist& topics, std::span<const Document> reference,
                int top_n = 10, double eps = 1e-12);

// Per-topic word ids ranked by probability, ties broken by ascending id;
// n is clamped to V.
std::vector<std::vector<std::int32_t>> top_words(const TopicWordDist& topics,
                                                 int n);

}  // namespace bbm
