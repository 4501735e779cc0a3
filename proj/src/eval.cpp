#include "bbm/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>

#include "bbm/kernels.hpp"

namespace bbm {

namespace {

void check_row_stochastic(const TopicWordDist& topics, const char* where) {
  if (topics.K < 1 || topics.V < 1 ||
      topics.p.size() != static_cast<std::size_t>(topics.K) * topics.V) {
    throw std::invalid_argument(std::string(where) + ": bad topics shape");
  }
  const kernels::Backend& ker = kernels::active();
  for (std::int32_t k = 0; k < topics.K; ++k) {
    const double* row = topics.row(k);
    for (std::int32_t v = 0; v < topics.V; ++v) {
      if (!(row[v] >= 0.0)) {
        throw std::invalid_argument(std::string(where) +
                                    ": negative topic probability");
      }
    }
    if (std::fabs(ker.sum(row, topics.V) - 1.0) > 1e-6) {
      throw std::invalid_argument(std::string(where) +
                                  ": topic row is not normalized");
    }
  }
}

TopicWordDist normalized_rows(const std::vector<double>& lambda,
                              std::int32_t k_size, std::int32_t v_size) {
  const kernels::Backend& ker = kernels::active();
  TopicWordDist topics;
  topics.K = k_size;
  topics.V = v_size;
  topics.p = lambda;
  for (std::int32_t k = 0; k < k_size; ++k) {
    double* row = topics.p.data() + static_cast<std::size_t>(k) * v_size;
    const double total = ker.sum(row, v_size);
    ker.scale(row, 1.0 / total, v_size);
  }
  return topics;
}

// Runs fn(i) for i in [0, n) on `workers` threads; each result lands in its
// own slot, so the outcome does not depend on the thread count.
template <typename Fn>
void parallel_docs(std::size_t n, int workers, Fn&& fn) {
  const std::size_t n_threads =
      std::min<std::size_t>(n, workers < 1 ? 1 : workers);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
        fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Outcome of scoring one test document.
struct DocScore {
  double value = 0.0;
  std::size_t dropped = 0;
  enum { kScored, kShort, kEmpty } status = kScored;
};

// Per-document splits are seeded from the document content, so evaluation
// does not depend on the order of the test corpus.
std::uint64_t doc_seed(const Document& doc, std::uint64_t seed) {
  std::uint64_t h = fnv1a(doc.words.data(),
                          doc.words.size() * sizeof(doc.words[0]));
  return h ^ seed;
}

template <typename InferPi>
DocScore score_document(const Document& doc, const TopicWordDist& topics,
                        const LppOptions& options, const InferPi& infer) {
  DocScore out;
  Rng rng(doc_seed(doc, options.seed));
  const auto split = split_heldout(doc, rng);
  if (!split) {
    out.status = DocScore::kShort;
    return out;
  }

  // Rebuild w1 as a document, dropping words outside the training
  // vocabulary (the model has no row for them).
  Document observed;
  for (std::size_t i = 0; i < split->w1.size();) {
    std::size_t j = i;
    while (j < split->w1.size() && split->w1[j] == split->w1[i]) ++j;
    if (split->w1[i] >= 0 && split->w1[i] < topics.V) {
      observed.words.emplace_back(split->w1[i],
                                  static_cast<std::int32_t>(j - i));
    }
    i = j;
  }
  std::vector<std::int32_t> probe;
  for (std::int32_t w : split->w2) {
    if (w >= 0 && w < topics.V) {
      probe.push_back(w);
    } else {
      ++out.dropped;
    }
  }
  if (observed.words.empty() || probe.empty()) {
    out.status = DocScore::kEmpty;
    return out;
  }

  BobDocument bob;
  if (options.use_biterms) {
    bob = build_bob(observed);
  } else {
    bob.terms = observed.words;
    bob.N = observed.token_count();
  }
  const std::vector<double> pi = infer(bob);

  double total = 0.0;
  for (std::int32_t w : probe) {
    double p = 0.0;
    for (std::int32_t k = 0; k < topics.K; ++k)
      p += topics.p[static_cast<std::size_t>(k) * topics.V + w] * pi[k];
    total += std::log(p);
  }
  out.value = total / static_cast<double>(probe.size());
  return out;
}

template <typename InferPi>
LppResult lpp_impl(const TopicWordDist& topics,
                   std::span<const Document> test_docs,
                   const LppOptions& options, const InferPi& infer) {
  check_row_stochastic(topics, "lpp");
  std::vector<DocScore> scores(test_docs.size());
  parallel_docs(test_docs.size(), options.workers, [&](std::size_t i) {
    scores[i] = score_document(test_docs[i], topics, options, infer);
  });

  LppResult result;
  std::vector<double> values;
  values.reserve(scores.size());
  for (const DocScore& s : scores) {
    result.dropped_words += s.dropped;
    switch (s.status) {
      case DocScore::kScored:
        values.push_back(s.value);
        break;
      case DocScore::kShort:
        ++result.skipped_short;
        break;
      case DocScore::kEmpty:
        ++result.skipped_empty;
        break;
    }
  }
  result.documents = values.size();
  if (!values.empty()) {
    // Summing in sorted order keeps the mean bit-identical under any
    // permutation of the test corpus.
    std::sort(values.begin(), values.end());
    double total = 0.0;
    for (double v : values) total += v;
    result.lpp = total / static_cast<double>(values.size());
  }
  return result;
}

}  // namespace

std::optional<HeldoutSplit> split_heldout(const Document& doc, Rng& rng) {
  std::vector<std::int32_t> tokens;
  for (const auto& [w, c] : doc.words) tokens.insert(tokens.end(), c, w);
  const std::size_t n = tokens.size();
  if (n <= 4) return std::nullopt;

  const auto target = static_cast<std::size_t>(std::llround(0.8 * n));
  const std::size_t observed = std::clamp<std::size_t>(target, 1, n - 1);
  rng.shuffle(tokens);

  HeldoutSplit split;
  split.w1.assign(tokens.begin(), tokens.begin() + observed);
  split.w2.assign(tokens.begin() + observed, tokens.end());
  std::sort(split.w1.begin(), split.w1.end());
  std::sort(split.w2.begin(), split.w2.end());
  return split;
}

TopicWordDist topics_from_lda(const LdaBModel& model) {
  return normalized_rows(model.lambda, model.K, model.V);
}

TopicWordDist topics_from_hdp(const HdpBModel& model) {
  return normalized_rows(model.lambda, model.K, model.V);
}

TopicWordDist convert_topics(std::span<const double> biterm_topics,
                             std::int32_t K, const BitermVocabulary& bvocab) {
  const std::int64_t v_b = bvocab.V_b();
  if (K < 1 || bvocab.V < 1 ||
      biterm_topics.size() != static_cast<std::size_t>(K) * v_b) {
    throw std::invalid_argument("convert_topics: bad input shape");
  }
  TopicWordDist topics;
  topics.K = K;
  topics.V = bvocab.V;
  topics.p.assign(static_cast<std::size_t>(K) * bvocab.V, 0.0);
  for (std::int32_t k = 0; k < K; ++k) {
    const double* in = biterm_topics.data() + static_cast<std::size_t>(k) * v_b;
    double total = 0.0;
    for (std::int64_t b = 0; b < v_b; ++b) {
      if (!(in[b] >= 0.0)) {
        throw std::invalid_argument(
            "convert_topics: negative biterm probability");
      }
      total += in[b];
    }
    if (std::fabs(total - 1.0) > 1e-6) {
      throw std::invalid_argument("convert_topics: input row " +
                                  std::to_string(k) + " is not normalized");
    }
    double* out = topics.p.data() + static_cast<std::size_t>(k) * bvocab.V;
    // A word's own id doubles as its diagonal biterm; cross-pair mass is
    // split evenly between the two member words.
    for (std::int32_t v = 0; v < bvocab.V; ++v) out[v] = in[v];
    for (std::size_t p = 0; p < bvocab.pairs.size(); ++p) {
      const double half = 0.5 * in[bvocab.V + p];
      out[bvocab.pairs[p].first] += half;
      out[bvocab.pairs[p].second] += half;
    }
  }
  return topics;
}

LppResult lpp(const TopicWordDist& topics, const LdaBModel& model,
              std::span<const Document> test_docs, const LppOptions& options) {
  if (topics.K != model.K || topics.V != model.V) {
    throw std::invalid_argument("lpp: topics shape does not match the model");
  }
  const TopicExpectations expect = topic_expectations(model);
  const kernels::Backend& ker = kernels::active();
  return lpp_impl(topics, test_docs, options, [&](const BobDocument& bob) {
    const LocalState local = local_vb(bob, model, expect, options.local_tol,
                                      options.local_max_iters);
    std::vector<double> pi = local.gamma;
    ker.scale(pi.data(), 1.0 / ker.sum(pi.data(), model.K), model.K);
    return pi;
  });
}

LppResult lpp(const TopicWordDist& topics, const HdpBModel& model,
              std::span<const Document> test_docs, const LppOptions& options) {
  if (topics.K != model.K || topics.V != model.V) {
    throw std::invalid_argument("lpp: topics shape does not match the model");
  }
  const TopicExpectations expect = hdp_topic_expectations(model);
  const std::vector<double> elog_sigma_v =
      stick_expectations(model.a, model.b, true);
  return lpp_impl(topics, test_docs, options, [&](const BobDocument& bob) {
    const HdpLocalState local =
        hdp_local_step(bob, model, expect, elog_sigma_v, options.local_tol,
                       options.local_max_iters);
    const std::vector<double> weights =
        stick_mean(local.gamma1, local.gamma2, true);
    std::vector<double> pi(model.K, 0.0);
    for (std::int32_t i = 0; i < model.T; ++i) {
      kernels::active().axpy(weights[i],
                     local.zeta.data() + static_cast<std::size_t>(i) * model.K,
                     pi.data(), model.K);
    }
    return pi;
  });
}

NpmiResult npmi(const TopicWordDist& topics, std::span<const Document> reference,
                int top_n, double eps) {
  check_row_stochastic(topics, "npmi");
  if (reference.empty()) {
    throw std::invalid_argument("npmi: empty reference corpus");
  }
  if (top_n < 1) throw std::invalid_argument("npmi: top_n must be >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("npmi: eps must be positive");

  const auto tops = top_words(topics, top_n);

  // Document-presence lists for every word that appears in some top list.
  std::unordered_map<std::int32_t, std::vector<std::int32_t>> presence;
  for (const auto& words : tops)
    for (std::int32_t w : words) presence.emplace(w, std::vector<std::int32_t>{});
  for (std::size_t d = 0; d < reference.size(); ++d) {
    for (const auto& [w, c] : reference[d].words) {
      auto it = presence.find(w);
      if (it != presence.end()) it->second.push_back(static_cast<std::int32_t>(d));
    }
  }

  const double d_total = static_cast<double>(reference.size());
  auto co_count = [](const std::vector<std::int32_t>& a,
                     const std::vector<std::int32_t>& b) {
    std::size_t i = 0, j = 0, c = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] < b[j]) {
        ++i;
      } else if (b[j] < a[i]) {
        ++j;
      } else {
        ++c, ++i, ++j;
      }
    }
    return c;
  };

  NpmiResult result;
  result.per_topic.resize(topics.K, 0.0);
  for (std::int32_t k = 0; k < topics.K; ++k) {
    const auto& words = tops[k];
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
      for (std::size_t j = 0; j < words.size(); ++j) {
        if (i == j) continue;
        const auto& di = presence.at(words[i]);
        const auto& dj = presence.at(words[j]);
        const double p_i = (static_cast<double>(di.size()) + eps) / d_total;
        const double p_j = (static_cast<double>(dj.size()) + eps) / d_total;
        const double p_ij =
            (static_cast<double>(co_count(di, dj)) + eps) / d_total;
        total += std::log(p_ij / (p_i * p_j)) / -std::log(p_ij);
        ++pairs;
      }
    }
    result.per_topic[k] = pairs ? total / static_cast<double>(pairs) : 0.0;
    result.mean += result.per_topic[k];
  }
  result.mean /= static_cast<double>(topics.K);
  return result;
}

std::vector<std::vector<std::int32_t>> top_words(const TopicWordDist& topics,
                                                 int n) {
  check_row_stochastic(topics, "top_words");
  if (n < 1) throw std::invalid_argument("top_words: n must be >= 1");
  const std::int32_t take = std::min<std::int32_t>(n, topics.V);
  std::vector<std::vector<std::int32_t>> out(topics.K);
  std::vector<std::int32_t> order(topics.V);
  for (std::int32_t k = 0; k < topics.K; ++k) {
    const double* row = topics.row(k);
    for (std::int32_t v = 0; v < topics.V; ++v) order[v] = v;
    std::partial_sort(order.begin(), order.begin() + take, order.end(),
                      [row](std::int32_t a, std::int32_t b) {
                        if (row[a] != row[b]) return row[a] > row[b];
                        return a < b;
                      });
    out[k].assign(order.begin(), order.begin() + take);
  }
  return out;
}

}  // namespace bbm
