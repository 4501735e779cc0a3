#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace bbm {

/** A preprocessed document: sparse word counts with ids strictly ascending. */
struct Document {
  std::vector<std::pair<std::int32_t, std::int32_t>> words;  // (id, count > 0)
  std::int32_t label = 0;

  std::int64_t token_count() const {
    std::int64_t n = 0;
    for (const auto& wc : words) n += wc.second;
    return n;
  }
};

/** Token <-> dense id mapping plus per-token document frequencies. */
struct Vocabulary {
  std::vector<std::string> tokens;                     // id -> token
  std::unordered_map<std::string, std::int32_t> ids;   // token -> id
  std::vector<std::int32_t> df;                        // id -> doc frequency

  std::int32_t size() const { return static_cast<std::int32_t>(tokens.size()); }
  std::int32_t id_of(const std::string& tok) const {
    auto it = ids.find(tok);
    return it == ids.end() ? -1 : it->second;
  }
};

struct Corpus {
  std::vector<Document> docs;
  Vocabulary vocab;
  // Distinct label names in order of first appearance, and the raw label
  // string of each surviving document. Both empty when input had no labels.
  // For non-integer labels, doc.label is a 1-based index into label_names;
  // integer labels pass through doc.label unchanged.
  std::vector<std::string> label_names;
  std::vector<std::string> doc_labels;

  std::size_t D() const { return docs.size(); }
};

/**
 * Bag of biterms for one document: the original terms plus every unordered
 * pair of distinct words, weighted min(f_i, f_j). A stored pair (i, j) with
 * i < j stands for both ordered biterms (w_i, w_j) and (w_j, w_i), so it
 * enters inference with effective multiplicity 2*m. N is the term token
 * count, M the ordered-biterm token count 2 * sum(m).
 */
struct BobDocument {
  struct Biterm {
    std::int32_t w1, w2;  // w1 < w2
    std::int32_t m;       // min of the two word frequencies
  };
  std::vector<std::pair<std::int32_t, std::int32_t>> terms;  // (id, n_dn)
  std::vector<Biterm> biterms;                               // lexicographic
  std::int64_t N = 0;
  std::int64_t M = 0;
};

/** Retained cross-word biterms (document co-occurrence >= threshold). */
struct BitermVocabulary {
  std::int32_t V = 0;
  std::int32_t threshold = 1;
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;  // lexicographic
  std::unordered_map<std::uint64_t, std::int32_t> pair_index;

  static std::uint64_t key(std::int32_t i, std::int32_t j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint32_t>(j);
  }
  // Index into pairs for (i, j) with i < j, or -1 if not retained.
  std::int32_t index_of(std::int32_t i, std::int32_t j) const {
    auto it = pair_index.find(key(i, j));
    return it == pair_index.end() ? -1 : it->second;
  }
  std::int64_t V_b() const {
    return static_cast<std::int64_t>(V) + static_cast<std::int64_t>(pairs.size());
  }
};

struct PreprocessOptions {
  std::unordered_set<std::string> stopwords;
  int min_df = 3;
  int min_doc_len = 3;
  bool enable_stemming = false;
  // Hook applied per token when enable_stemming is set; identity by default
  // (kept as a seam — no stemmer ships with the library).
  std::function<std::string(const std::string&)> stemmer;
};

// Lowercased alphanumeric tokenization. ASCII letters are lowercased, digits
// kept, any other ASCII byte separates tokens; bytes >= 0x80 pass through so
// UTF-8 words survive untouched.
std::vector<std::string> tokenize(const std::string& line);

/**
 * Full preprocessing pipeline: optional `<label><TAB><text>` detection (used
 * only when every nonempty line has a TAB), tokenization, stopword removal,
 * optional stemming, then min_df / min_doc_len filtering iterated to a fixed
 * point so every surviving token really appears in >= min_df surviving
 * documents. The vocabulary is rebuilt over survivors in lexicographic
 * order. Throws std::runtime_error when nothing survives.
 */
Corpus preprocess(const std::vector<std::string>& raw_lines,
                  const PreprocessOptions& opts);

// Biterm construction per the min-frequency rule. Requires >= 1 distinct word.
BobDocument build_bob(const Document& doc);

BitermVocabulary build_biterm_vocabulary(const Corpus& corpus, int threshold);

/**
 * BoB construction over a whole corpus. When `filter` is given, biterms not
 * retained in it are dropped from each document (M is recomputed); wide_docs
 * counts documents beyond 200 distinct words, where the quadratic biterm
 * blow-up starts to hurt.
 */
struct BobBuildSummary {
  std::size_t docs = 0;
  std::size_t wide_docs = 0;
};
std::vector<BobDocument> build_bob_corpus(const Corpus& corpus,
                                          const BitermVocabulary* filter,
                                          BobBuildSummary* summary);

enum class Repr { bow, bob };
enum class Weighting { tf, tfidf };

/**
 * LIBSVM-style sparse export: one `<label> <fid>:<weight>` line per document,
 * feature ids 1-based and strictly ascending (words 1..V, then retained
 * biterm pairs V+1.. in lexicographic order). tf = count / doc length,
 * tf-idf = tf * ln(D / df(w)); a biterm's weight is the min of its two word
 * weights. Zero weights are dropped; documents left with no features are
 * emitted as a bare label and counted in the summary.
 */
struct ExportSummary {
  std::size_t docs = 0;
  std::size_t zero_feature_docs = 0;
};
ExportSummary export_features(const Corpus& corpus, Repr repr,
                              Weighting weighting,
                              const BitermVocabulary* bvocab,
                              const std::string& out_path);

// ---- file I/O ----------------------------------------------------------

std::vector<std::string> read_lines(const std::string& path);

// One token per line; id = 0-based line number.
void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path);  // df left at zero

// Bag format: `docid id:count id:count ...` with ascending ids.
void save_bag(const Corpus& corpus, const std::string& path);
Corpus load_bag(const std::string& bag_path, const std::string& vocab_path);

// Map tokenized text onto an existing vocabulary; unseen tokens dropped.
Document document_from_tokens(const std::vector<std::string>& tokens,
                              const Vocabulary& vocab);

}  // namespace bbm
