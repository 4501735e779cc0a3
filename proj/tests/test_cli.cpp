#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bbm/corpus.hpp"
#include "bbm/eval.hpp"
#include "bbm/lda_b.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

// Runs the bbm binary with the given arguments and returns its exit code.
// Output is discarded; tests inspect the files the command writes instead.
int run(const std::string& args) {
  const std::string cmd =
      std::string("\"") + BBM_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  if (raw == -1) return -1;
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

struct TempDir {
  fs::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("bbm_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const {
    return (path / name).string();
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  REQUIRE(bool(out));
  out << content;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> file_lines(const std::string& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  REQUIRE(bool(in));
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// Splits on `sep`, keeping empty fields (including a trailing one).
std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (true) {
    const std::size_t next = s.find(sep, at);
    if (next == std::string::npos) {
      out.push_back(s.substr(at));
      break;
    }
    out.push_back(s.substr(at, next - at));
    at = next + 1;
  }
  return out;
}

// Reads a two-column `metric,value` report into a map.
std::map<std::string, std::string> read_report(const std::string& path) {
  std::map<std::string, std::string> out;
  const std::vector<std::string> lines = file_lines(path);
  REQUIRE(!lines.empty());
  REQUIRE(lines[0] == "metric,value");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    REQUIRE(fields.size() == 2);
    out[fields[0]] = fields[1];
  }
  return out;
}

double as_double(const std::string& s) {
  REQUIRE(!s.empty());
  return std::strtod(s.c_str(), nullptr);
}

// Thirty five-token documents drawn from three disjoint ten-word themes, with
// a label column. Every word recurs enough to survive modest min-df settings.
std::string themed_corpus() {
  static const char* themes[3][10] = {
      {"apple", "banana", "cherry", "grape", "lemon", "mango", "melon", "peach",
       "pear", "plum"},
      {"red", "green", "blue", "cyan", "pink", "teal", "amber", "olive",
       "coral", "ivory"},
      {"dog", "cat", "fox", "wolf", "bear", "lynx", "otter", "hare", "mole",
       "deer"}};
  std::ostringstream out;
  for (int i = 0; i < 30; ++i) {
    const int theme = i % 3;
    out << "t" << theme;
    for (int j = 0; j < 5; ++j)
      out << (j ? " " : "\t") << themes[theme][(i / 3 + 2 * j) % 10];
    out << "\n";
  }
  return out.str();
}

// Preprocessed corpus shared by the training-oriented cases.
struct Fixture {
  TempDir tmp;
  std::string raw, bag, vocab_path;

  Fixture() : raw(tmp / "raw.txt") {
    write_file(raw, themed_corpus());
    const std::string prep = tmp / "prep";
    REQUIRE(run("preprocess --input " + raw + " --output-dir " + prep +
                " --min-df 1 --min-doc-len 1") == 0);
    bag = prep + "/corpus.bag";
    vocab_path = prep + "/vocab.txt";
  }
};

}  // namespace

TEST_CASE("preprocess writes a loadable bag, vocabulary, and labels") {
  TempDir tmp;
  const std::string raw = tmp / "raw.txt";
  write_file(raw, themed_corpus());

  const std::string prep = tmp / "prep";
  REQUIRE(run("preprocess --input " + raw + " --output-dir " + prep +
              " --min-df 1 --min-doc-len 1") == 0);

  const bbm::Corpus corpus =
      bbm::load_bag(prep + "/corpus.bag", prep + "/vocab.txt");
  CHECK(corpus.D() == 30);
  CHECK(corpus.vocab.size() == 30);  // three themes x ten words
  for (const auto& doc : corpus.docs) {
    CHECK(doc.token_count() == 5);
    for (const auto& [id, count] : doc.words) {
      CHECK(id >= 0);
      CHECK(id < corpus.vocab.size());
      CHECK(count > 0);
    }
  }
  const std::vector<std::string> labels = file_lines(prep + "/labels.txt");
  REQUIRE(labels.size() == 30);
  for (int i = 0; i < 30; ++i)
    CHECK(labels[i] == "t" + std::to_string(i % 3));
  CHECK(fs::exists(prep + "/preprocess.config"));

  // The same input and settings give byte-identical outputs.
  const std::string again = tmp / "prep2";
  REQUIRE(run("preprocess --input " + raw + " --output-dir " + again +
              " --min-df 1 --min-doc-len 1") == 0);
  CHECK(file_bytes(prep + "/corpus.bag") == file_bytes(again + "/corpus.bag"));
  CHECK(file_bytes(prep + "/vocab.txt") == file_bytes(again + "/vocab.txt"));
  CHECK(file_bytes(prep + "/labels.txt") == file_bytes(again + "/labels.txt"));
}

TEST_CASE("preprocess honors min-df and stopwords") {
  TempDir tmp;
  const std::string raw = tmp / "raw.txt";
  write_file(raw, themed_corpus() + "t0\tapple banana zzzrare cherry grape\n");

  const std::string strict = tmp / "strict";
  REQUIRE(run("preprocess --input " + raw + " --output-dir " + strict +
              " --min-df 2 --min-doc-len 1") == 0);
  const auto strict_vocab = file_lines(strict + "/vocab.txt");
  for (const auto& token : strict_vocab) CHECK(token != "zzzrare");

  const std::string lax = tmp / "lax";
  REQUIRE(run("preprocess --input " + raw + " --output-dir " + lax +
              " --min-df 1 --min-doc-len 1") == 0);
  const auto lax_vocab = file_lines(lax + "/vocab.txt");
  CHECK(std::count(lax_vocab.begin(), lax_vocab.end(), "zzzrare") == 1);
  CHECK(lax_vocab.size() == strict_vocab.size() + 1);

  const std::string stops = tmp / "stopwords.txt";
  write_file(stops, "apple\nbanana\n");
  const std::string filtered = tmp / "filtered";
  REQUIRE(run("preprocess --input " + raw + " --output-dir " + filtered +
              " --min-df 1 --min-doc-len 1 --stopwords " + stops) == 0);
  for (const auto& token : file_lines(filtered + "/vocab.txt")) {
    CHECK(token != "apple");
    CHECK(token != "banana");
  }
}

TEST_CASE("train is deterministic for a fixed seed") {
  Fixture fx;
  const std::string base = " --corpus " + fx.bag + " --vocab " + fx.vocab_path +
                           " --K 4 --batch-size 10 --epochs 2";

  const std::string a = fx.tmp / "a";
  const std::string b = fx.tmp / "b";
  const std::string c = fx.tmp / "c";
  REQUIRE(run("train" + base + " --seed 11 --output-dir " + a) == 0);
  REQUIRE(run("train" + base + " --seed 11 --output-dir " + b) == 0);
  REQUIRE(run("train" + base + " --seed 12 --output-dir " + c) == 0);

  CHECK(file_bytes(a + "/model.ckpt") == file_bytes(b + "/model.ckpt"));
  CHECK(file_bytes(a + "/model.ckpt") != file_bytes(c + "/model.ckpt"));

  const bbm::LdaBModel model = bbm::load_lda_checkpoint(a + "/model.ckpt");
  CHECK(model.K == 4);
  CHECK(model.V == 30);
  for (double x : model.lambda) {
    CHECK(std::isfinite(x));
    CHECK(x > 0.0);
  }
}

TEST_CASE("flag misuse exits with the usage code") {
  Fixture fx;
  const std::string base =
      "train --corpus " + fx.bag + " --vocab " + fx.vocab_path +
      " --output-dir " + (fx.tmp / "junk");

  CHECK(run(base + " --learner kps") == 2);               // kps needs a prior
  CHECK(run(base + " --prior missing.txt") == 2);         // prior without kps
  CHECK(run(base + " --T 5") == 2);                       // lda-b has no T
  CHECK(run(base + " --omega 2") == 2);                   // or omega
  CHECK(run(base + " --learner svb --tau 5") == 2);       // svi-only knobs
  CHECK(run(base + " --learner svb --kappa 0.5") == 2);
  CHECK(run(base + " --learner svb --D 100") == 2);
  CHECK(run(base + " --repr bow --biterm-threshold 2") == 2);
  CHECK(run(base + " --model hdp-b --learner svb") == 2);
  CHECK(run(base + " --model nonsense") == 2);            // rejected value
  CHECK(run(base + " --bogus-flag 1") == 2);              // unknown flag
  CHECK(run("train --vocab " + fx.vocab_path) == 2);      // missing --corpus
  CHECK(run("") == 2);                                    // missing subcommand
  CHECK(run("frobnicate") == 2);                          // unknown subcommand
  CHECK(run("--help") == 0);
  CHECK(run("train --help") == 0);
}

TEST_CASE("missing input files exit with the runtime code") {
  TempDir tmp;
  CHECK(run("train --corpus " + (tmp / "no.bag") + " --vocab " +
            (tmp / "no.txt") + " --output-dir " + (tmp / "out")) == 1);
  CHECK(run("eval --checkpoint " + (tmp / "no.ckpt") + " --test-corpus " +
            (tmp / "no.bag") + " --vocab " + (tmp / "no.txt")) == 1);
  CHECK(run("preprocess --input " + (tmp / "no.txt") + " --output-dir " +
            (tmp / "out")) == 1);
}

TEST_CASE("eval reports the uniform-topic log predictive probability") {
  Fixture fx;
  const std::size_t v_size = file_lines(fx.vocab_path).size();
  REQUIRE(v_size == 30);

  // A checkpoint whose rows normalize to the uniform distribution.
  std::ostringstream ckpt;
  ckpt << "3 " << v_size << " 1.0 0.01\n";
  for (int k = 0; k < 3; ++k) {
    for (std::size_t v = 0; v < v_size; ++v) ckpt << (v ? "\t" : "") << "1.0";
    ckpt << "\n";
  }
  const std::string ckpt_path = fx.tmp / "uniform.ckpt";
  write_file(ckpt_path, ckpt.str());

  const std::string report = fx.tmp / "report.csv";
  REQUIRE(run("eval --checkpoint " + ckpt_path + " --test-corpus " + fx.bag +
              " --vocab " + fx.vocab_path + " --output " + report) == 0);

  const auto rows = read_report(report);
  CHECK(as_double(rows.at("lpp")) ==
        doctest::Approx(-std::log(double(v_size))).epsilon(1e-9));
  CHECK(rows.at("lpp_documents") == "30");
  CHECK(rows.at("lpp_skipped_short") == "0");
  CHECK(rows.at("lpp_skipped_empty") == "0");
  CHECK(rows.at("lpp_dropped_words") == "0");
}

TEST_CASE("eval report matches the library run with the same options") {
  Fixture fx;
  const std::string dir = fx.tmp / "run";
  REQUIRE(run("train --corpus " + fx.bag + " --vocab " + fx.vocab_path +
              " --output-dir " + dir +
              " --K 5 --batch-size 10 --epochs 2 --seed 9") == 0);

  const std::string report = fx.tmp / "report.csv";
  REQUIRE(run("eval --checkpoint " + dir + "/model.ckpt --test-corpus " +
              fx.bag + " --vocab " + fx.vocab_path + " --output " + report +
              " --seed 7 --top-n 4") == 0);
  const auto rows = read_report(report);

  const bbm::Corpus corpus = bbm::load_bag(fx.bag, fx.vocab_path);
  const bbm::LdaBModel model = bbm::load_lda_checkpoint(dir + "/model.ckpt");
  const bbm::TopicWordDist topics = bbm::topics_from_lda(model);
  bbm::LppOptions opt;
  opt.seed = 7;
  const bbm::LppResult expected = bbm::lpp(topics, model, corpus.docs, opt);
  const bbm::NpmiResult coherence = bbm::npmi(topics, corpus.docs, 4);

  // %.17g round-trips doubles exactly, so the report must match bit for bit.
  CHECK(as_double(rows.at("lpp")) == expected.lpp);
  CHECK(rows.at("lpp_documents") == std::to_string(expected.documents));
  CHECK(as_double(rows.at("npmi_mean")) == coherence.mean);
  REQUIRE(coherence.per_topic.size() == 5);
  for (std::size_t k = 0; k < coherence.per_topic.size(); ++k) {
    CHECK(as_double(rows.at("npmi_topic_" + std::to_string(k))) ==
          coherence.per_topic[k]);
  }
}

TEST_CASE("metrics log records one row per step with rho only for svi") {
  Fixture fx;
  const std::string base = " --corpus " + fx.bag + " --vocab " + fx.vocab_path +
                           " --K 4 --batch-size 10 --epochs 2 --seed 1";

  const std::string svi = fx.tmp / "svi";
  REQUIRE(run("train" + base + " --output-dir " + svi + " --test-corpus " +
              fx.bag) == 0);
  auto lines = file_lines(svi + "/metrics.csv");
  REQUIRE(lines.size() == 7);  // header + 6 minibatch steps
  CHECK(lines[0] == "step,rho,docs,elapsed_ms,heldout_lpp");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    REQUIRE(f.size() == 5);
    CHECK(f[0] == std::to_string(i));
    const double rho = as_double(f[1]);
    CHECK(rho > 0.0);
    CHECK(rho <= 1.0);
    CHECK(f[2] == std::to_string(10 * i));
    CHECK(as_double(f[4]) < 0.0);  // log probability of held-out halves
  }

  // svb has no learning rate; without a test corpus the lpp column stays
  // empty as well.
  const std::string svb = fx.tmp / "svb";
  REQUIRE(run("train" + base + " --learner svb --output-dir " + svb) == 0);
  lines = file_lines(svb + "/metrics.csv");
  REQUIRE(lines.size() == 7);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    REQUIRE(f.size() == 5);
    CHECK(f[1].empty());
    CHECK(f[4].empty());
  }

  // --eval-every thins the held-out column, not the rows.
  const std::string sparse = fx.tmp / "sparse";
  REQUIRE(run("train" + base + " --output-dir " + sparse + " --test-corpus " +
              fx.bag + " --eval-every 3") == 0);
  lines = file_lines(sparse + "/metrics.csv");
  REQUIRE(lines.size() == 7);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    REQUIRE(f.size() == 5);
    CHECK(f[4].empty() == (i % 3 != 0));
  }
}

TEST_CASE("training from the emitted config reproduces the checkpoint") {
  Fixture fx;
  const std::string dir = fx.tmp / "run";
  REQUIRE(run("train --corpus " + fx.bag + " --vocab " + fx.vocab_path +
              " --output-dir " + dir +
              " --K 4 --batch-size 10 --epochs 2 --seed 5") == 0);
  const std::string saved = file_bytes(dir + "/model.ckpt");

  // The config alone must rebuild the identical model; an explicit flag on
  // top of it must win over the file.
  REQUIRE(run("train --config " + dir + "/train.config") == 0);
  CHECK(file_bytes(dir + "/model.ckpt") == saved);

  const std::string other = fx.tmp / "other";
  REQUIRE(run("train --config " + dir + "/train.config --seed 6 " +
              "--output-dir " + other) == 0);
  CHECK(file_bytes(other + "/model.ckpt") != saved);
}

TEST_CASE("hdp-b trains and evaluates end to end") {
  Fixture fx;
  const std::string dir = fx.tmp / "hdp";
  REQUIRE(run("train --corpus " + fx.bag + " --vocab " + fx.vocab_path +
              " --output-dir " + dir + " --model hdp-b --K 8 --T 3" +
              " --batch-size 10 --epochs 2 --seed 2") == 0);

  const auto header = split(file_lines(dir + "/model.ckpt").at(0), ' ');
  CHECK(header.size() == 5);  // truncations and priors, no V column

  const std::string report = fx.tmp / "hdp_report.csv";
  REQUIRE(run("eval --checkpoint " + dir + "/model.ckpt --test-corpus " +
              fx.bag + " --vocab " + fx.vocab_path + " --output " + report) ==
          0);
  const auto rows = read_report(report);
  CHECK(as_double(rows.at("lpp")) < 0.0);
  CHECK(rows.at("lpp_documents") == "30");
  CHECK(std::isfinite(as_double(rows.at("npmi_mean"))));
  CHECK(rows.count("npmi_topic_7") == 1);  // one coherence row per topic
  CHECK(rows.count("npmi_topic_8") == 0);
}

TEST_CASE("top-words writes one line of known tokens per topic") {
  Fixture fx;
  const std::string dir = fx.tmp / "run";
  REQUIRE(run("train --corpus " + fx.bag + " --vocab " + fx.vocab_path +
              " --output-dir " + dir +
              " --K 4 --batch-size 10 --epochs 2 --seed 3") == 0);

  const std::string out = fx.tmp / "tops.txt";
  REQUIRE(run("top-words --checkpoint " + dir + "/model.ckpt --vocab " +
              fx.vocab_path + " --n 3 --output " + out) == 0);

  const auto vocab_lines = file_lines(fx.vocab_path);
  const std::set<std::string> known(vocab_lines.begin(), vocab_lines.end());
  const auto lines = file_lines(out);
  REQUIRE(lines.size() == 4);
  for (const auto& line : lines) {
    const auto words = split(line, ' ');
    REQUIRE(words.size() == 3);
    const std::set<std::string> distinct(words.begin(), words.end());
    CHECK(distinct.size() == 3);
    for (const auto& w : words) CHECK(known.count(w) == 1);
  }
  CHECK(fs::exists(out + ".config"));

  // A vocabulary of the wrong size is a runtime error.
  const std::string short_vocab = fx.tmp / "short_vocab.txt";
  write_file(short_vocab, "alpha\nbeta\n");
  CHECK(run("top-words --checkpoint " + dir + "/model.ckpt --vocab " +
            short_vocab + " --output " + (fx.tmp / "x.txt")) == 1);
}

TEST_CASE("export-features writes ascending one-based LIBSVM features") {
  TempDir tmp;
  const std::string raw = tmp / "raw.txt";
  write_file(raw, themed_corpus());

  const std::string out = tmp / "features.libsvm";
  REQUIRE(run("export-features --input " + raw + " --output " + out +
              " --min-df 1 --min-doc-len 1 --repr bob --weighting tf") == 0);
  CHECK(fs::exists(out + ".config"));

  const auto lines = file_lines(out);
  REQUIRE(lines.size() == 30);
  for (const auto& line : lines) {
    const auto fields = split(line, ' ');
    REQUIRE(!fields.empty());
    (void)std::stoi(fields[0]);  // label column parses as an integer
    int prev = 0;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const auto colon = fields[i].find(':');
      REQUIRE(colon != std::string::npos);
      const int fid = std::stoi(fields[i].substr(0, colon));
      const double weight = std::stod(fields[i].substr(colon + 1));
      CHECK(fid > prev);  // strictly ascending, so one-based throughout
      CHECK(weight > 0.0);
      prev = fid;
    }
    CHECK(fields.size() > 1);
  }

  // Plain bag-of-words features never exceed the vocabulary size.
  const std::string bow = tmp / "bow.libsvm";
  REQUIRE(run("export-features --input " + raw + " --output " + bow +
              " --min-df 1 --min-doc-len 1 --repr bow --weighting tfidf") ==
          0);
  int max_fid = 0;
  for (const auto& line : file_lines(bow)) {
    const auto fields = split(line, ' ');
    for (std::size_t i = 1; i < fields.size(); ++i) {
      max_fid = std::max(max_fid,
                         std::stoi(fields[i].substr(0, fields[i].find(':'))));
    }
  }
  CHECK(max_fid <= 30);

  const std::string again = tmp / "again.libsvm";
  REQUIRE(run("export-features --input " + raw + " --output " + again +
              " --min-df 1 --min-doc-len 1 --repr bob --weighting tf") == 0);
  CHECK(file_bytes(out) == file_bytes(again));
}

TEST_CASE("kps training accepts a word-embedding prior") {
  Fixture fx;
  const auto vocab_lines = file_lines(fx.vocab_path);
  std::ostringstream prior;
  for (std::size_t v = 0; v < vocab_lines.size(); ++v) {
    prior << vocab_lines[v];
    for (int k = 0; k < 4; ++k)
      prior << ' ' << (v % 4 == static_cast<std::size_t>(k) ? 2.0 : 0.0);
    prior << "\n";
  }
  const std::string prior_path = fx.tmp / "prior.txt";
  write_file(prior_path, prior.str());

  const std::string dir = fx.tmp / "kps";
  REQUIRE(run("train --corpus " + fx.bag + " --vocab " + fx.vocab_path +
              " --output-dir " + dir + " --learner kps --prior " + prior_path +
              " --K 4 --batch-size 10 --seed 8") == 0);

  const bbm::LdaBModel model = bbm::load_lda_checkpoint(dir + "/model.ckpt");
  CHECK(model.K == 4);
  CHECK(model.V == 30);
  for (double x : model.lambda) {
    CHECK(std::isfinite(x));
    CHECK(x > 0.0);
  }
}
