#include "bbm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace bbm {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char ch : line) {
    if (ch >= 0x80) {
      cur.push_back(static_cast<char>(ch));
    } else if (std::isalnum(ch)) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    } else {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

namespace {

// `<label><TAB><text>` is assumed only when every nonempty line has a TAB.
bool looks_labeled(const std::vector<std::string>& lines) {
  bool any = false;
  for (const auto& l : lines) {
    if (l.empty()) continue;
    any = true;
    if (l.find('\t') == std::string::npos) return false;
  }
  return any;
}

// Integer labels pass through; anything else gets a 1-based id in order of
// first appearance. names collects the distinct labels in that same order.
std::vector<std::int32_t> map_labels(const std::vector<std::string>& raw,
                                     std::vector<std::string>* names) {
  bool all_int = true;
  for (const auto& s : raw) {
    if (s.empty()) {
      all_int = false;
      break;
    }
    std::size_t pos = 0;
    try {
      (void)std::stol(s, &pos);
    } catch (...) {
      pos = 0;
    }
    if (pos != s.size()) {
      all_int = false;
      break;
    }
  }
  std::vector<std::int32_t> out(raw.size());
  std::unordered_map<std::string, std::int32_t> seen;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto it = seen.find(raw[i]);
    if (it == seen.end()) {
      const auto id = static_cast<std::int32_t>(seen.size() + 1);
      it = seen.emplace(raw[i], id).first;
      names->push_back(raw[i]);
    }
    out[i] = all_int ? static_cast<std::int32_t>(std::stol(raw[i]))
                     : it->second;
  }
  return out;
}

}  // namespace

Corpus preprocess(const std::vector<std::string>& raw_lines,
                  const PreprocessOptions& opts) {
  if (raw_lines.empty()) throw std::runtime_error("preprocess: no input lines");

  const bool labeled = looks_labeled(raw_lines);
  std::vector<std::string> label_strings;
  std::vector<std::map<std::string, int>> doc_counts;

  for (const auto& line : raw_lines) {
    std::string text = line;
    std::string label;
    if (labeled) {
      const auto tab = line.find('\t');
      label = line.substr(0, tab);
      text = line.substr(tab + 1);
    }
    std::map<std::string, int> counts;
    for (auto& tok : tokenize(text)) {
      if (opts.stopwords.count(tok)) continue;
      if (opts.enable_stemming && opts.stemmer) tok = opts.stemmer(tok);
      ++counts[tok];
    }
    doc_counts.push_back(std::move(counts));
    if (labeled) label_strings.push_back(std::move(label));
  }

  // Iterate the two filters to a fixed point: dropping short documents can
  // push a token below min_df, and dropping that token can shorten documents.
  std::vector<std::size_t> alive(doc_counts.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::string, int> df;
    for (std::size_t i : alive)
      for (const auto& tc : doc_counts[i]) ++df[tc.first];
    for (std::size_t i : alive) {
      auto& counts = doc_counts[i];
      for (auto it = counts.begin(); it != counts.end();) {
        if (df[it->first] < opts.min_df) {
          it = counts.erase(it);
          changed = true;
        } else {
          ++it;
        }
      }
    }
    std::vector<std::size_t> kept;
    for (std::size_t i : alive) {
      long len = 0;
      for (const auto& tc : doc_counts[i]) len += tc.second;
      if (len >= opts.min_doc_len) {
        kept.push_back(i);
      } else {
        changed = true;
      }
    }
    alive.swap(kept);
    if (alive.empty())
      throw std::runtime_error("preprocess: empty corpus after filtering");
  }

  Corpus corpus;
  std::map<std::string, std::int32_t> vocab_df;
  for (std::size_t i : alive)
    for (const auto& tc : doc_counts[i]) ++vocab_df[tc.first];
  for (const auto& td : vocab_df) {  // std::map iterates lexicographically
    corpus.vocab.ids.emplace(td.first, corpus.vocab.size());
    corpus.vocab.tokens.push_back(td.first);
    corpus.vocab.df.push_back(td.second);
  }

  std::vector<std::int32_t> label_ids;
  if (labeled) label_ids = map_labels(label_strings, &corpus.label_names);

  for (std::size_t i : alive) {
    Document doc;
    for (const auto& tc : doc_counts[i])
      doc.words.emplace_back(corpus.vocab.ids.at(tc.first), tc.second);
    if (labeled) {
      doc.label = label_ids[i];
      corpus.doc_labels.push_back(label_strings[i]);
    }
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

BobDocument build_bob(const Document& doc) {
  if (doc.words.empty())
    throw std::invalid_argument("build_bob: document has no words");
  BobDocument bob;
  bob.terms = doc.words;
  for (const auto& wc : doc.words) bob.N += wc.second;
  const std::size_t n = doc.words.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::int32_t m = std::min(doc.words[i].second, doc.words[j].second);
      bob.biterms.push_back({doc.words[i].first, doc.words[j].first, m});
      bob.M += 2 * static_cast<std::int64_t>(m);
    }
  }
  return bob;
}

BitermVocabulary build_biterm_vocabulary(const Corpus& corpus, int threshold) {
  if (corpus.docs.empty())
    throw std::invalid_argument("build_biterm_vocabulary: empty corpus");
  std::unordered_map<std::uint64_t, std::int32_t> codf;
  for (const auto& doc : corpus.docs) {
    const std::size_t n = doc.words.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        ++codf[BitermVocabulary::key(doc.words[i].first, doc.words[j].first)];
  }
  BitermVocabulary bv;
  bv.V = corpus.vocab.size();
  bv.threshold = threshold;
  for (const auto& kv : codf)
    if (kv.second >= threshold)
      bv.pairs.emplace_back(static_cast<std::int32_t>(kv.first >> 32),
                            static_cast<std::int32_t>(kv.first & 0xFFFFFFFF));
  std::sort(bv.pairs.begin(), bv.pairs.end());
  for (std::size_t i = 0; i < bv.pairs.size(); ++i)
    bv.pair_index.emplace(
        BitermVocabulary::key(bv.pairs[i].first, bv.pairs[i].second),
        static_cast<std::int32_t>(i));
  return bv;
}

std::vector<BobDocument> build_bob_corpus(const Corpus& corpus,
                                          const BitermVocabulary* filter,
                                          BobBuildSummary* summary) {
  std::vector<BobDocument> out;
  out.reserve(corpus.docs.size());
  for (const auto& doc : corpus.docs) {
    BobDocument bob = build_bob(doc);
    if (filter != nullptr) {
      std::vector<BobDocument::Biterm> kept;
      bob.M = 0;
      for (const auto& b : bob.biterms) {
        if (filter->index_of(b.w1, b.w2) >= 0) {
          kept.push_back(b);
          bob.M += 2 * static_cast<std::int64_t>(b.m);
        }
      }
      bob.biterms.swap(kept);
    }
    if (summary != nullptr) {
      ++summary->docs;
      if (doc.words.size() > 200) ++summary->wide_docs;
    }
    out.push_back(std::move(bob));
  }
  return out;
}

ExportSummary export_features(const Corpus& corpus, Repr repr,
                              Weighting weighting,
                              const BitermVocabulary* bvocab,
                              const std::string& out_path) {
  if (repr == Repr::bob && bvocab == nullptr)
    throw std::invalid_argument(
        "export_features: bob representation requires a biterm vocabulary");
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);

  const double D = static_cast<double>(corpus.D());
  ExportSummary summary;
  char buf[64];
  for (const auto& doc : corpus.docs) {
    const double len = static_cast<double>(doc.token_count());
    // (feature id, weight), built ascending: word ids first, then pairs.
    std::vector<std::pair<std::int64_t, double>> feats;
    std::vector<double> wweight(doc.words.size());
    for (std::size_t i = 0; i < doc.words.size(); ++i) {
      const auto [w, c] = doc.words[i];
      double weight = static_cast<double>(c) / len;
      if (weighting == Weighting::tfidf)
        weight *= std::log(D / static_cast<double>(corpus.vocab.df[w]));
      wweight[i] = weight;
      if (weight != 0.0) feats.emplace_back(w + 1, weight);
    }
    if (repr == Repr::bob) {
      std::vector<std::pair<std::int64_t, double>> pair_feats;
      for (std::size_t i = 0; i + 1 < doc.words.size(); ++i) {
        for (std::size_t j = i + 1; j < doc.words.size(); ++j) {
          const std::int32_t idx =
              bvocab->index_of(doc.words[i].first, doc.words[j].first);
          if (idx < 0) continue;
          const double weight = std::min(wweight[i], wweight[j]);
          if (weight != 0.0)
            pair_feats.emplace_back(static_cast<std::int64_t>(bvocab->V) + 1 + idx,
                                    weight);
        }
      }
      std::sort(pair_feats.begin(), pair_feats.end());
      feats.insert(feats.end(), pair_feats.begin(), pair_feats.end());
    }
    out << doc.label;
    for (const auto& [fid, weight] : feats) {
      std::snprintf(buf, sizeof(buf), " %lld:%.10g",
                    static_cast<long long>(fid), weight);
      out << buf;
    }
    out << '\n';
    ++summary.docs;
    if (feats.empty()) ++summary.zero_feature_docs;
  }
  return summary;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& tok : vocab.tokens) out << tok << '\n';
}

Vocabulary load_vocabulary(const std::string& path) {
  Vocabulary vocab;
  for (auto& tok : read_lines(path)) {
    if (tok.empty()) continue;
    vocab.ids.emplace(tok, vocab.size());
    vocab.tokens.push_back(tok);
    vocab.df.push_back(0);
  }
  if (vocab.tokens.empty())
    throw std::runtime_error("empty vocabulary file " + path);
  return vocab;
}

void save_bag(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    out << d;
    for (const auto& [w, c] : corpus.docs[d].words) out << ' ' << w << ':' << c;
    out << '\n';
  }
}

Corpus load_bag(const std::string& bag_path, const std::string& vocab_path) {
  Corpus corpus;
  corpus.vocab = load_vocabulary(vocab_path);
  for (const auto& line : read_lines(bag_path)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::size_t docid = 0;
    if (!(ss >> docid)) throw std::runtime_error("bad bag line: " + line);
    Document doc;
    std::string item;
    while (ss >> item) {
      const auto colon = item.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error("bad bag entry: " + item);
      const long w = std::stol(item.substr(0, colon));
      const long c = std::stol(item.substr(colon + 1));
      if (w < 0 || w >= corpus.vocab.size() || c <= 0)
        throw std::runtime_error("bag entry out of range: " + item);
      doc.words.emplace_back(static_cast<std::int32_t>(w),
                             static_cast<std::int32_t>(c));
    }
    std::sort(doc.words.begin(), doc.words.end());
    corpus.docs.push_back(std::move(doc));
  }
  if (corpus.docs.empty()) throw std::runtime_error("empty bag file " + bag_path);
  for (const auto& doc : corpus.docs)
    for (const auto& [w, c] : doc.words) ++corpus.vocab.df[w];
  return corpus;
}

Document document_from_tokens(const std::vector<std::string>& tokens,
                              const Vocabulary& vocab) {
  std::map<std::int32_t, std::int32_t> counts;
  for (const auto& tok : tokens) {
    const std::int32_t id = vocab.id_of(tok);
    if (id >= 0) ++counts[id];
  }
  Document doc;
  for (const auto& [w, c] : counts) doc.words.emplace_back(w, c);
  return doc;
}

}  // namespace bbm
