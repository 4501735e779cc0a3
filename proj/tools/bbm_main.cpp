#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "bbm/corpus.hpp"
#include "bbm/eval.hpp"
#include "bbm/hdp_b.hpp"
#include "bbm/lda_b.hpp"
#include "bbm/streaming.hpp"

namespace fs = std::filesystem;

namespace {

// Flag-combination problems detected after parsing; exit code 2 like any
// other usage error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_g(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::unordered_set<std::string> out;
  if (path.empty()) return out;
  for (const std::string& line : bbm::read_lines(path)) {
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.insert(tok);
  }
  return out;
}

// The resolved settings of a run, written next to its outputs as key=value
// lines. Only options the user actually set are listed; everything else
// takes the built-in default, so the file alone reproduces the run.
void write_resolved_config(const CLI::App& cmd, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << "# bbm " << cmd.get_name()
      << " settings; unlisted options use built-in defaults\n";
  for (const CLI::Option* opt : cmd.get_options()) {
    if (opt->count() == 0 || opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "config" || name == "help") continue;
    for (const std::string& value : opt->results())
      out << name << "=\"" << value << "\"\n";
  }
}

std::string strip(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/**
 * Expands `--config FILE` into ordinary arguments before parsing. The file
 * holds key=value lines (as written by write_resolved_config); a key is
 * skipped when the same option already appears on the command line, so
 * explicit flags override the file.
 */
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
  std::string config_path;
  std::unordered_set<std::string> present;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const std::string name = a.substr(0, a.find('='));
    present.insert(name);
    if (name == "--config") {
      if (a.size() > 8 && a[8] == '=') {
        config_path = a.substr(9);
      } else if (i + 1 < args.size()) {
        config_path = args[i + 1];
      }
    }
  }
  if (config_path.empty()) return args;

  for (const std::string& raw : bbm::read_lines(config_path)) {
    const std::string line = strip(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line is not key=value: " + line);
    }
    const std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key.empty()) throw UsageError("config line has no key: " + line);
    if (present.count("--" + key) == 0)
      args.push_back("--" + key + "=" + value);
  }
  return args;
}

// LDA-B and HDP-B checkpoints share the text layout but differ in the
// number of header fields (4 vs 5).
int checkpoint_header_fields(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty checkpoint " + path);
  std::istringstream fields(line);
  std::string tok;
  int count = 0;
  while (fields >> tok) ++count;
  return count;
}

std::vector<bbm::BobDocument> docs_for_repr(const bbm::Corpus& corpus,
                                            const std::string& repr,
                                            int biterm_threshold) {
  if (repr == "bow") {
    // Degenerate path: terms only, no biterm machinery.
    std::vector<bbm::BobDocument> out;
    out.reserve(corpus.docs.size());
    for (const auto& doc : corpus.docs) {
      bbm::BobDocument bob;
      bob.terms = doc.words;
      bob.N = doc.token_count();
      out.push_back(std::move(bob));
    }
    return out;
  }
  if (biterm_threshold > 1) {
    const bbm::BitermVocabulary bvocab =
        bbm::build_biterm_vocabulary(corpus, biterm_threshold);
    return bbm::build_bob_corpus(corpus, &bvocab, nullptr);
  }
  return bbm::build_bob_corpus(corpus, nullptr, nullptr);
}

// ---- preprocess ------------------------------------------------------------

struct PreprocessArgs {
  std::string input;
  std::string out_dir;
  std::string stopwords_path;
  int min_df = 3;
  int min_doc_len = 3;
};

void cmd_preprocess(const PreprocessArgs& args, const CLI::App& cmd) {
  bbm::PreprocessOptions opts;
  opts.stopwords = load_stopwords(args.stopwords_path);
  opts.min_df = args.min_df;
  opts.min_doc_len = args.min_doc_len;

  const bbm::Corpus corpus = bbm::preprocess(bbm::read_lines(args.input), opts);

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  bbm::save_bag(corpus, (dir / "corpus.bag").string());
  bbm::save_vocabulary(corpus.vocab, (dir / "vocab.txt").string());
  if (!corpus.doc_labels.empty()) {
    std::ofstream labels(dir / "labels.txt");
    for (const auto& label : corpus.doc_labels) labels << label << "\n";
  }
  write_resolved_config(cmd, dir / "preprocess.config");

  std::int64_t tokens = 0;
  for (const auto& doc : corpus.docs) tokens += doc.token_count();
  std::cout << "documents " << corpus.D() << "\nvocabulary "
            << corpus.vocab.size() << "\ntokens " << tokens << "\n";
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string corpus_path;
  std::string vocab_path;
  std::string out_dir = "run";
  std::string model = "lda-b";
  std::string repr = "bob";
  std::string learner = "svi";
  std::int32_t K = 100;
  std::int32_t T = 20;
  double alpha = 1.0;
  double eta = 0.01;
  double omega = 1.0;
  double tau = 1.0;
  double kappa = 0.9;
  std::int64_t batch_size = 0;  // 0: 5000, or 500 for corpora under 5000 docs
  int biterm_threshold = 1;
  double D = 0.0;  // 0: use the corpus size
  std::uint64_t seed = 0;
  std::string prior_path;
  std::string test_corpus_path;
  int workers = 1;
  int epochs = 1;
  int eval_every = 1;
};

void validate_train(const TrainArgs& args, const CLI::App& cmd) {
  const bool hdp = args.model == "hdp-b";
  if (hdp && args.learner != "svi")
    throw UsageError("--learner " + args.learner +
                     " applies to lda-b only; hdp-b trains with svi");
  if (!hdp && cmd.count("--T") > 0)
    throw UsageError("--T applies to hdp-b only");
  if (!hdp && cmd.count("--omega") > 0)
    throw UsageError("--omega applies to hdp-b only");
  if (args.learner == "kps" && args.prior_path.empty())
    throw UsageError("--learner kps requires --prior");
  if (args.learner != "kps" && cmd.count("--prior") > 0)
    throw UsageError("--prior applies to kps only");
  if (args.learner != "svi") {
    if (cmd.count("--tau") > 0 || cmd.count("--kappa") > 0)
      throw UsageError("--tau/--kappa apply to svi only");
    if (cmd.count("--D") > 0)
      throw UsageError("--D applies to svi only");
  }
  if (args.repr == "bow" && cmd.count("--biterm-threshold") > 0)
    throw UsageError("--biterm-threshold applies to bob only");
}

class MetricsLog {
 public:
  MetricsLog(const fs::path& path, bool lpp_enabled)
      : out_(path), lpp_enabled_(lpp_enabled) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << "step,rho,docs,elapsed_ms,heldout_lpp\n";
    start_ = std::chrono::steady_clock::now();
  }

  // rho and lpp may be NaN, which prints as an empty column.
  void row(std::int64_t step, double rho, std::size_t docs, double lpp) {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start_);
    out_ << step << ',' << (std::isnan(rho) ? "" : fmt_g(rho)) << ',' << docs
         << ',' << elapsed.count() << ','
         << (std::isnan(lpp) ? "" : fmt_g(lpp)) << "\n";
  }

  bool lpp_enabled() const { return lpp_enabled_; }

 private:
  std::ofstream out_;
  bool lpp_enabled_;
  std::chrono::steady_clock::time_point start_;
};

void cmd_train(const TrainArgs& args, const CLI::App& cmd) {
  validate_train(args, cmd);

  const bbm::Corpus corpus =
      bbm::load_bag(args.corpus_path, args.vocab_path);
  const std::int32_t v_size = corpus.vocab.size();
  const std::vector<bbm::BobDocument> docs =
      docs_for_repr(corpus, args.repr, args.biterm_threshold);
  if (docs.empty()) throw std::runtime_error("training corpus is empty");

  std::vector<bbm::Document> test_docs;
  if (!args.test_corpus_path.empty())
    test_docs = bbm::load_bag(args.test_corpus_path, args.vocab_path).docs;

  const std::size_t batch =
      args.batch_size > 0
          ? static_cast<std::size_t>(args.batch_size)
          : (docs.size() < 5000 ? std::size_t{500} : std::size_t{5000});
  const double d_estimate =
      args.D > 0.0 ? args.D : static_cast<double>(docs.size());

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  MetricsLog metrics(dir / "metrics.csv", !test_docs.empty());

  bbm::LppOptions lpp_opt;
  lpp_opt.seed = args.seed;
  lpp_opt.use_biterms = args.repr == "bob";
  lpp_opt.workers = args.workers;
  const int eval_every = args.eval_every < 1 ? 1 : args.eval_every;

  if (args.model == "hdp-b") {
    bbm::HdpSviConfig cfg;
    cfg.K = args.K;
    cfg.T = args.T;
    cfg.V = v_size;
    cfg.omega = args.omega;
    cfg.alpha = args.alpha;
    cfg.eta = args.eta;
    cfg.tau = args.tau;
    cfg.kappa = args.kappa;
    cfg.batch_size = batch;
    cfg.D = d_estimate;
    cfg.seed = args.seed;
    cfg.epochs = args.epochs;
    cfg.workers = args.workers;
    const bbm::HdpBModel model = bbm::hdp_svi(
        docs, cfg,
        [&](std::int64_t t, double rho, std::size_t seen,
            const bbm::HdpBModel& snapshot) {
          double lpp_value = NAN;
          if (metrics.lpp_enabled() && t % eval_every == 0) {
            lpp_value =
                bbm::lpp(bbm::topics_from_hdp(snapshot), snapshot, test_docs,
                         lpp_opt)
                    .lpp;
          }
          metrics.row(t, rho, seen, lpp_value);
        });
    bbm::save_checkpoint(model, (dir / "model.ckpt").string());
  } else {
    bbm::LearnerConfig cfg;
    cfg.mode = args.learner == "svi"   ? bbm::LearnerMode::svi
               : args.learner == "svb" ? bbm::LearnerMode::svb
                                       : bbm::LearnerMode::kps;
    cfg.tau = args.tau;
    cfg.kappa = args.kappa;
    cfg.batch_size = batch;
    cfg.D = d_estimate;
    cfg.seed = args.seed;
    cfg.workers = args.workers;

    bbm::LdaBModel model =
        bbm::init_model(args.K, v_size, args.alpha, args.eta, args.seed);
    bbm::PriorMatrix prior;
    if (cfg.mode == bbm::LearnerMode::kps) {
      prior = bbm::load_prior_embeddings(args.prior_path, corpus.vocab, args.K);
      model.eta_matrix = prior.values;
    }

    std::int64_t t = 1;
    std::size_t seen = 0;
    for (int epoch = 0; epoch < args.epochs; ++epoch) {
      for (std::size_t at = 0; at < docs.size(); at += batch) {
        const std::size_t len = std::min(batch, docs.size() - at);
        const std::span<const bbm::BobDocument> minibatch(docs.data() + at,
                                                          len);
        double rho = NAN;
        switch (cfg.mode) {
          case bbm::LearnerMode::svi:
            bbm::svi_step(model, minibatch, cfg, t);
            rho = bbm::learning_rate(cfg.tau, cfg.kappa, t);
            break;
          case bbm::LearnerMode::svb:
            bbm::svb_step(model, minibatch, cfg);
            break;
          case bbm::LearnerMode::kps:
            bbm::kps_step(model, minibatch, prior, cfg);
            break;
        }
        seen += len;
        double lpp_value = NAN;
        if (metrics.lpp_enabled() && t % eval_every == 0) {
          lpp_value =
              bbm::lpp(bbm::topics_from_lda(model), model, test_docs, lpp_opt)
                  .lpp;
        }
        metrics.row(t, rho, seen, lpp_value);
        ++t;
      }
    }
    bbm::save_checkpoint(model, (dir / "model.ckpt").string());
  }

  write_resolved_config(cmd, dir / "train.config");
  std::cout << "checkpoint " << (dir / "model.ckpt").string() << "\n";
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string test_corpus;
  std::string vocab;
  std::string output = "eval_report.csv";
  std::string repr = "bob";
  std::uint64_t seed = 0;
  int workers = 1;
  int top_n = 10;
};

void cmd_eval(const EvalArgs& args, const CLI::App& cmd) {
  const bbm::Corpus corpus = bbm::load_bag(args.test_corpus, args.vocab);

  bbm::LppOptions opt;
  opt.seed = args.seed;
  opt.use_biterms = args.repr == "bob";
  opt.workers = args.workers;

  const int fields = checkpoint_header_fields(args.checkpoint);
  bbm::TopicWordDist topics;
  bbm::LppResult result;
  if (fields == 4) {
    const bbm::LdaBModel model = bbm::load_lda_checkpoint(args.checkpoint);
    if (model.V != corpus.vocab.size()) {
      throw std::runtime_error(
          "vocabulary mismatch: checkpoint V=" + std::to_string(model.V) +
          ", vocabulary has " + std::to_string(corpus.vocab.size()));
    }
    topics = bbm::topics_from_lda(model);
    result = bbm::lpp(topics, model, corpus.docs, opt);
  } else if (fields == 5) {
    const bbm::HdpBModel model = bbm::load_hdp_checkpoint(args.checkpoint);
    if (model.V != corpus.vocab.size()) {
      throw std::runtime_error(
          "vocabulary mismatch: checkpoint V=" + std::to_string(model.V) +
          ", vocabulary has " + std::to_string(corpus.vocab.size()));
    }
    topics = bbm::topics_from_hdp(model);
    result = bbm::lpp(topics, model, corpus.docs, opt);
  } else {
    throw std::runtime_error("unrecognized checkpoint header in " +
                             args.checkpoint);
  }
  if (result.documents == 0)
    throw std::runtime_error("no evaluable documents in the test corpus");

  const bbm::NpmiResult coherence = bbm::npmi(topics, corpus.docs, args.top_n);

  std::ofstream report(args.output);
  if (!report) throw std::runtime_error("cannot write " + args.output);
  report << "metric,value\n";
  report << "lpp," << fmt_g(result.lpp) << "\n";
  report << "lpp_documents," << result.documents << "\n";
  report << "lpp_skipped_short," << result.skipped_short << "\n";
  report << "lpp_skipped_empty," << result.skipped_empty << "\n";
  report << "lpp_dropped_words," << result.dropped_words << "\n";
  report << "npmi_mean," << fmt_g(coherence.mean) << "\n";
  for (std::size_t k = 0; k < coherence.per_topic.size(); ++k)
    report << "npmi_topic_" << k << ',' << fmt_g(coherence.per_topic[k])
           << "\n";
  write_resolved_config(cmd, args.output + ".config");

  std::cout << "lpp " << fmt_g(result.lpp) << " over " << result.documents
            << " documents\nnpmi " << fmt_g(coherence.mean) << "\n";
}

// ---- export-features -------------------------------------------------------

struct ExportArgs {
  std::string input;
  std::string output = "features.libsvm";
  std::string stopwords_path;
  std::string repr = "bob";
  std::string weighting = "tf";
  int biterm_threshold = 1;
  int min_df = 3;
  int min_doc_len = 3;
};

void cmd_export(const ExportArgs& args, const CLI::App& cmd) {
  bbm::PreprocessOptions opts;
  opts.stopwords = load_stopwords(args.stopwords_path);
  opts.min_df = args.min_df;
  opts.min_doc_len = args.min_doc_len;
  const bbm::Corpus corpus = bbm::preprocess(bbm::read_lines(args.input), opts);

  const bbm::Repr repr = args.repr == "bob" ? bbm::Repr::bob : bbm::Repr::bow;
  const bbm::Weighting weighting =
      args.weighting == "tf" ? bbm::Weighting::tf : bbm::Weighting::tfidf;
  bbm::BitermVocabulary bvocab;
  if (repr == bbm::Repr::bob)
    bvocab = bbm::build_biterm_vocabulary(corpus, args.biterm_threshold);

  const bbm::ExportSummary summary = bbm::export_features(
      corpus, repr, weighting, repr == bbm::Repr::bob ? &bvocab : nullptr,
      args.output);
  write_resolved_config(cmd, args.output + ".config");
  std::cout << "documents " << summary.docs << "\nzero_feature_docs "
            << summary.zero_feature_docs << "\n";
}

// ---- top-words -------------------------------------------------------------

struct TopWordsArgs {
  std::string checkpoint;
  std::string vocab;
  std::string output = "top_words.txt";
  int n = 10;
};

void cmd_top_words(const TopWordsArgs& args, const CLI::App& cmd) {
  const bbm::Vocabulary vocab = bbm::load_vocabulary(args.vocab);
  const int fields = checkpoint_header_fields(args.checkpoint);
  bbm::TopicWordDist topics;
  if (fields == 4) {
    topics = bbm::topics_from_lda(bbm::load_lda_checkpoint(args.checkpoint));
  } else if (fields == 5) {
    topics = bbm::topics_from_hdp(bbm::load_hdp_checkpoint(args.checkpoint));
  } else {
    throw std::runtime_error("unrecognized checkpoint header in " +
                             args.checkpoint);
  }
  if (topics.V != vocab.size()) {
    throw std::runtime_error(
        "vocabulary mismatch: checkpoint V=" + std::to_string(topics.V) +
        ", vocabulary has " + std::to_string(vocab.size()));
  }

  const auto tops = bbm::top_words(topics, args.n);
  std::ofstream out(args.output);
  if (!out) throw std::runtime_error("cannot write " + args.output);
  for (const auto& words : tops) {
    for (std::size_t i = 0; i < words.size(); ++i)
      out << (i ? " " : "") << vocab.tokens[words[i]];
    out << "\n";
  }
  write_resolved_config(cmd, args.output + ".config");
  std::cout << "topics " << tops.size() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Short-text topic modeling with bag-of-biterms representations"};
  app.require_subcommand(1);

  std::string config_file;
  const auto add_config = [&config_file](CLI::App* sub) {
    sub->add_option("--config", config_file,
                    "Settings file (key=value); explicit flags override");
  };

  PreprocessArgs pre_args;
  CLI::App* pre = app.add_subcommand(
      "preprocess", "Tokenize and filter raw text into a bag corpus");
  add_config(pre);
  pre->add_option("--input", pre_args.input, "Raw text, one document per line")
      ->required();
  pre->add_option("--output-dir", pre_args.out_dir, "Output directory")
      ->required();
  pre->add_option("--stopwords", pre_args.stopwords_path, "Stopword list file");
  pre->add_option("--min-df", pre_args.min_df, "Minimum document frequency");
  pre->add_option("--min-doc-len", pre_args.min_doc_len,
                  "Minimum tokens per document");

  TrainArgs train_args;
  CLI::App* train =
      app.add_subcommand("train", "Train a topic model on a bag corpus");
  add_config(train);
  train->add_option("--corpus", train_args.corpus_path, "Bag corpus file")
      ->required();
  train->add_option("--vocab", train_args.vocab_path, "Vocabulary file")
      ->required();
  train->add_option("--output-dir", train_args.out_dir, "Output directory");
  train->add_option("--model", train_args.model, "Topic model")
      ->check(CLI::IsMember({"lda-b", "hdp-b"}));
  train->add_option("--repr", train_args.repr, "Document representation")
      ->check(CLI::IsMember({"bob", "bow"}));
  train->add_option("--learner", train_args.learner, "Learning algorithm")
      ->check(CLI::IsMember({"svi", "svb", "kps"}));
  train->add_option("--K", train_args.K, "Topic count (truncation for hdp-b)");
  train->add_option("--T", train_args.T, "Per-document truncation (hdp-b)");
  train->add_option("--alpha", train_args.alpha, "Document prior");
  train->add_option("--eta", train_args.eta, "Topic-word prior");
  train->add_option("--omega", train_args.omega, "Corpus stick prior (hdp-b)");
  train->add_option("--tau", train_args.tau, "Learning-rate delay (svi)");
  train->add_option("--kappa", train_args.kappa, "Forgetting rate (svi)");
  train->add_option("--batch-size", train_args.batch_size, "Minibatch size");
  train->add_option("--biterm-threshold", train_args.biterm_threshold,
                    "Minimum co-occurrence count for kept biterms");
  train->add_option("--D", train_args.D, "Corpus-size estimate (svi)");
  train->add_option("--seed", train_args.seed, "Random seed");
  train->add_option("--prior", train_args.prior_path,
                    "Word-embedding prior file (kps)");
  train->add_option("--test-corpus", train_args.test_corpus_path,
                    "Held-out bag corpus for per-step LPP");
  train->add_option("--eval-every", train_args.eval_every,
                    "Steps between held-out evaluations");
  train->add_option("--workers", train_args.workers, "Worker threads");
  train->add_option("--epochs", train_args.epochs, "Passes over the corpus");

  EvalArgs eval_args;
  CLI::App* eval =
      app.add_subcommand("eval", "Score a checkpoint on a test corpus");
  add_config(eval);
  eval->add_option("--checkpoint", eval_args.checkpoint, "Model checkpoint")
      ->required();
  eval->add_option("--test-corpus", eval_args.test_corpus, "Bag corpus file")
      ->required();
  eval->add_option("--vocab", eval_args.vocab, "Vocabulary file")->required();
  eval->add_option("--output", eval_args.output, "Report CSV path");
  eval->add_option("--repr", eval_args.repr,
                   "Representation for held-out inference")
      ->check(CLI::IsMember({"bob", "bow"}));
  eval->add_option("--seed", eval_args.seed, "Split seed");
  eval->add_option("--workers", eval_args.workers, "Worker threads");
  eval->add_option("--top-n", eval_args.top_n, "Top words per topic for NPMI");

  ExportArgs export_args;
  CLI::App* exp = app.add_subcommand(
      "export-features", "Preprocess raw text and write LIBSVM features");
  add_config(exp);
  exp->add_option("--input", export_args.input, "Raw text, one doc per line")
      ->required();
  exp->add_option("--output", export_args.output, "LIBSVM output path");
  exp->add_option("--stopwords", export_args.stopwords_path, "Stopword file");
  exp->add_option("--repr", export_args.repr, "Feature representation")
      ->check(CLI::IsMember({"bob", "bow"}));
  exp->add_option("--weighting", export_args.weighting, "Feature weighting")
      ->check(CLI::IsMember({"tf", "tfidf"}));
  exp->add_option("--biterm-threshold", export_args.biterm_threshold,
                  "Minimum co-occurrence count for kept biterms");
  exp->add_option("--min-df", export_args.min_df, "Minimum doc frequency");
  exp->add_option("--min-doc-len", export_args.min_doc_len,
                  "Minimum tokens per document");

  TopWordsArgs top_args;
  CLI::App* top =
      app.add_subcommand("top-words", "Write each topic's top words");
  add_config(top);
  top->add_option("--checkpoint", top_args.checkpoint, "Model checkpoint")
      ->required();
  top->add_option("--vocab", top_args.vocab, "Vocabulary file")->required();
  top->add_option("--output", top_args.output, "Output path");
  top->add_option("--n", top_args.n, "Words per topic");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = apply_config_file(std::move(args));
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (pre->parsed()) cmd_preprocess(pre_args, *pre);
    if (train->parsed()) cmd_train(train_args, *train);
    if (eval->parsed()) cmd_eval(eval_args, *eval);
    if (exp->parsed()) cmd_export(export_args, *exp);
    if (top->parsed()) cmd_top_words(top_args, *top);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
