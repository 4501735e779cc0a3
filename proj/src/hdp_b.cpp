#include "bbm/hdp_b.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bbm/kernels.hpp"
#include "bbm/rng.hpp"
#include "bbm/streaming.hpp"

namespace bbm {

namespace {

void check_positive(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!(v > 0.0)) {
      throw std::invalid_argument(std::string(what) +
                                  ": parameters must be positive");
    }
  }
}

void check_finite(const double* x, std::size_t n, std::int64_t doc_id,
                  const char* what) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) {
      std::ostringstream msg;
      msg << "non-finite " << what << " while inferring document " << doc_id;
      throw std::runtime_error(msg.str());
    }
  }
}

double entropy_term(const double* row, std::size_t n) {
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (row[i] > 0.0) h += row[i] * std::log(row[i]);
  return h;
}

}  // namespace

HdpBModel hdp_init_model(std::int32_t K, std::int32_t T, std::int32_t V,
                         double omega, double alpha, double eta,
                         std::uint64_t seed) {
  if (K < 1 || V < 1) {
    throw std::invalid_argument("hdp_init_model: K and V must be >= 1");
  }
  if (T < 1 || T > K) {
    throw std::invalid_argument("hdp_init_model: need 1 <= T <= K");
  }
  if (!(omega > 0.0) || !(alpha > 0.0) || !(eta > 0.0)) {
    throw std::invalid_argument(
        "hdp_init_model: omega, alpha, eta must be positive");
  }
  HdpBModel model;
  model.K = K;
  model.T = T;
  model.V = V;
  model.omega = omega;
  model.alpha = alpha;
  model.eta = eta;
  model.lambda.resize(static_cast<std::size_t>(K) * V);
  Rng rng(seed);
  for (auto& x : model.lambda) x = eta + rng.uniform01();
  model.a.assign(K, 1.0);
  model.b.assign(K, omega);
  return model;
}

std::vector<double> stick_expectations(std::span<const double> g1,
                                       std::span<const double> g2,
                                       bool force_last) {
  if (g1.empty() || g1.size() != g2.size()) {
    throw std::invalid_argument("stick_expectations: bad parameter shape");
  }
  check_positive(g1, "stick_expectations");
  check_positive(g2, "stick_expectations");
  const std::size_t n = g1.size();
  std::vector<double> out(n);
  double broken = 0.0;  // sum of E[log(1 - pi_j)] over sticks before i
  for (std::size_t i = 0; i < n; ++i) {
    const double psi_total = kernels::digamma(g1[i] + g2[i]);
    const bool pinned = force_last && i + 1 == n;
    const double elog_pi = pinned ? 0.0 : kernels::digamma(g1[i]) - psi_total;
    out[i] = elog_pi + broken;
    broken += kernels::digamma(g2[i]) - psi_total;
  }
  return out;
}

std::vector<double> stick_mean(std::span<const double> g1,
                               std::span<const double> g2, bool force_last) {
  if (g1.empty() || g1.size() != g2.size()) {
    throw std::invalid_argument("stick_mean: bad parameter shape");
  }
  check_positive(g1, "stick_mean");
  check_positive(g2, "stick_mean");
  const std::size_t n = g1.size();
  std::vector<double> out(n);
  double remain = 1.0;  // product of (1 - E[v_j]) over sticks before i
  for (std::size_t i = 0; i < n; ++i) {
    const bool pinned = force_last && i + 1 == n;
    const double v = pinned ? 1.0 : g1[i] / (g1[i] + g2[i]);
    out[i] = v * remain;
    remain *= 1.0 - v;
  }
  return out;
}

TopicExpectations hdp_topic_expectations(const HdpBModel& model) {
  const auto& ker = kernels::active();
  TopicExpectations expect;
  expect.K = model.K;
  expect.V = model.V;
  expect.elogbeta_t.resize(model.lambda.size());
  std::vector<double> tmp(model.V);
  for (std::int32_t k = 0; k < model.K; ++k) {
    const double* row = model.row(k);
    ker.digamma_array(row, tmp.data(), model.V);
    const double psi_total = kernels::digamma(ker.sum(row, model.V));
    for (std::int32_t v = 0; v < model.V; ++v)
      expect.elogbeta_t[static_cast<std::size_t>(v) * model.K + k] =
          tmp[v] - psi_total;
  }
  return expect;
}

HdpLocalState hdp_local_step(const BobDocument& doc, const HdpBModel& model,
                             const TopicExpectations& expect,
                             std::span<const double> elog_sigma_v, double tol,
                             int max_iters, std::int64_t doc_id) {
  if (doc.terms.empty()) {
    throw std::invalid_argument("hdp_local_step: document has no terms");
  }
  const std::int32_t t_size = model.T;
  const std::int32_t k_size = model.K;
  const auto& ker = kernels::active();

  HdpLocalState st;
  st.zeta.resize(static_cast<std::size_t>(t_size) * k_size);
  st.phi.resize(doc.terms.size() * t_size);
  st.phi_tilde.resize(doc.biterms.size() * t_size);
  st.gamma1.assign(t_size, 1.0);
  st.gamma2.assign(t_size, model.alpha);

  // Combined E[log beta] per biterm, formed word1 + word2 elementwise so
  // everything downstream is bit-identical under a stored word swap.
  std::vector<double> pair_beta(doc.biterms.size() * k_size);
  for (std::size_t b = 0; b < doc.biterms.size(); ++b)
    ker.add2(expect.word(doc.biterms[b].w1), expect.word(doc.biterms[b].w2),
             pair_beta.data() + b * k_size, k_size);

  // Initialization: zeta rows from the document's summed log-likelihood
  // alone, phi/phi~ from the zeta-weighted likelihoods, no stick terms yet.
  std::vector<double> likelihood(k_size, 0.0);
  for (const auto& [w, n] : doc.terms)
    ker.axpy(static_cast<double>(n), expect.word(w), likelihood.data(), k_size);
  for (std::size_t b = 0; b < doc.biterms.size(); ++b)
    ker.axpy(2.0 * static_cast<double>(doc.biterms[b].m),
             pair_beta.data() + b * k_size, likelihood.data(), k_size);
  double* zrow0 = st.zeta.data();
  for (std::int32_t k = 0; k < k_size; ++k) zrow0[k] = likelihood[k];
  ker.exp_normalize(zrow0, k_size);
  for (std::int32_t i = 1; i < t_size; ++i)
    std::copy(zrow0, zrow0 + k_size, st.zeta.data() + i * k_size);

  auto phi_rows = [&](bool with_sticks, const std::vector<double>& sigma_pi) {
    std::vector<double> score(t_size);
    for (std::size_t n = 0; n < doc.terms.size(); ++n) {
      const double* beta_w = expect.word(doc.terms[n].first);
      for (std::int32_t i = 0; i < t_size; ++i) {
        score[i] = ker.dot(st.zeta.data() + static_cast<std::size_t>(i) * k_size,
                           beta_w, k_size);
        if (with_sticks) score[i] += sigma_pi[i];
      }
      double* row = st.phi.data() + n * t_size;
      std::copy(score.begin(), score.end(), row);
      ker.exp_normalize(row, t_size);
    }
    for (std::size_t b = 0; b < doc.biterms.size(); ++b) {
      const double* beta_pair = pair_beta.data() + b * k_size;
      for (std::int32_t i = 0; i < t_size; ++i) {
        score[i] = ker.dot(st.zeta.data() + static_cast<std::size_t>(i) * k_size,
                           beta_pair, k_size);
        if (with_sticks) score[i] += sigma_pi[i];
      }
      double* row = st.phi_tilde.data() + b * t_size;
      std::copy(score.begin(), score.end(), row);
      ker.exp_normalize(row, t_size);
    }
  };
  phi_rows(false, {});

  std::vector<double> zeta_old(st.zeta.size());
  std::vector<double> zscore(k_size);
  for (int it = 1; it <= max_iters; ++it) {
    st.iterations = it;

    // gamma1_i = 1 + sum_n phi_n^i + sum_m phi~_m^i
    for (std::int32_t i = 0; i < t_size; ++i) st.gamma1[i] = 1.0;
    for (std::size_t n = 0; n < doc.terms.size(); ++n)
      ker.axpy(static_cast<double>(doc.terms[n].second),
               st.phi.data() + n * t_size, st.gamma1.data(), t_size);
    for (std::size_t b = 0; b < doc.biterms.size(); ++b)
      ker.axpy(2.0 * static_cast<double>(doc.biterms[b].m),
               st.phi_tilde.data() + b * t_size, st.gamma1.data(), t_size);
    // gamma2_i = alpha + the same sums taken over sticks j > i
    double tail = 0.0;
    for (std::int32_t i = t_size - 1; i >= 0; --i) {
      st.gamma2[i] = model.alpha + tail;
      tail += st.gamma1[i] - 1.0;
    }
    check_finite(st.gamma1.data(), st.gamma1.size(), doc_id, "gamma");

    // zeta_i^k from the corpus sticks plus the phi-weighted likelihoods.
    zeta_old.assign(st.zeta.begin(), st.zeta.end());
    for (std::int32_t i = 0; i < t_size; ++i) {
      std::copy(elog_sigma_v.begin(), elog_sigma_v.end(), zscore.begin());
      for (std::size_t n = 0; n < doc.terms.size(); ++n)
        ker.axpy(static_cast<double>(doc.terms[n].second) *
                     st.phi[n * t_size + i],
                 expect.word(doc.terms[n].first), zscore.data(), k_size);
      for (std::size_t b = 0; b < doc.biterms.size(); ++b)
        ker.axpy(2.0 * static_cast<double>(doc.biterms[b].m) *
                     st.phi_tilde[b * t_size + i],
                 pair_beta.data() + b * k_size, zscore.data(), k_size);
      double* zrow = st.zeta.data() + static_cast<std::size_t>(i) * k_size;
      std::copy(zscore.begin(), zscore.end(), zrow);
      ker.exp_normalize(zrow, k_size);
    }
    check_finite(st.zeta.data(), st.zeta.size(), doc_id, "zeta");

    // phi/phi~ from the document sticks plus zeta-weighted likelihoods.
    const std::vector<double> sigma_pi =
        stick_expectations(st.gamma1, st.gamma2, true);
    phi_rows(true, sigma_pi);

    double delta = 0.0;
    for (std::size_t j = 0; j < st.zeta.size(); ++j)
      delta += std::abs(st.zeta[j] - zeta_old[j]);
    if (delta / static_cast<double>(st.zeta.size()) < tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

HdpLocalState hdp_local_step(const BobDocument& doc, const HdpBModel& model,
                             double tol, int max_iters, std::int64_t doc_id) {
  const TopicExpectations expect = hdp_topic_expectations(model);
  const std::vector<double> elogsv = stick_expectations(model.a, model.b, true);
  return hdp_local_step(doc, model, expect, elogsv, tol, max_iters, doc_id);
}

std::vector<HdpLocalState> run_hdp_locals(std::span<const BobDocument> docs,
                                          const HdpBModel& model, double tol,
                                          int max_iters, int workers) {
  std::vector<HdpLocalState> locals(docs.size());
  if (docs.empty()) return locals;
  const TopicExpectations expect = hdp_topic_expectations(model);
  const std::vector<double> elogsv = stick_expectations(model.a, model.b, true);
  if (workers < 1) workers = 1;
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(workers), docs.size());
  if (n_threads == 1) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      locals[i] = hdp_local_step(docs[i], model, expect, elogsv, tol, max_iters,
                                 static_cast<std::int64_t>(i));
    }
    return locals;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t w = 0; w < n_threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= docs.size()) break;
        locals[i] = hdp_local_step(docs[i], model, expect, elogsv, tol,
                                   max_iters, static_cast<std::int64_t>(i));
      }
    });
  }
  for (auto& th : pool) th.join();
  return locals;
}

void hdp_global_update(HdpBModel& model, std::span<const BobDocument> docs,
                       std::span<const HdpLocalState> locals, double D,
                       double rho) {
  if (docs.empty() || docs.size() != locals.size()) {
    throw std::invalid_argument("hdp_global_update: bad minibatch shape");
  }
  if (!(D > 0.0)) {
    throw std::invalid_argument("hdp_global_update: D must be positive");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("hdp_global_update: rho must be in [0, 1]");
  }
  const auto& ker = kernels::active();
  const std::int32_t t_size = model.T;
  const std::int32_t k_size = model.K;
  const double scale = D / static_cast<double>(docs.size());

  std::vector<double> stats_t(static_cast<std::size_t>(model.V) * k_size, 0.0);
  std::vector<double> a_stat(k_size, 0.0);
  std::vector<double> b_stat(k_size, 0.0);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const BobDocument& doc = docs[d];
    const HdpLocalState& st = locals[d];
    for (std::size_t n = 0; n < doc.terms.size(); ++n) {
      double* col =
          stats_t.data() + static_cast<std::size_t>(doc.terms[n].first) * k_size;
      for (std::int32_t i = 0; i < t_size; ++i)
        ker.axpy(static_cast<double>(doc.terms[n].second) *
                     st.phi[n * t_size + i],
                 st.zeta.data() + static_cast<std::size_t>(i) * k_size, col,
                 k_size);
    }
    for (std::size_t b = 0; b < doc.biterms.size(); ++b) {
      const auto& bt = doc.biterms[b];
      double* col1 = stats_t.data() + static_cast<std::size_t>(bt.w1) * k_size;
      double* col2 = stats_t.data() + static_cast<std::size_t>(bt.w2) * k_size;
      for (std::int32_t i = 0; i < t_size; ++i) {
        const double w =
            2.0 * static_cast<double>(bt.m) * st.phi_tilde[b * t_size + i];
        const double* zrow =
            st.zeta.data() + static_cast<std::size_t>(i) * k_size;
        ker.axpy(w, zrow, col1, k_size);
        ker.axpy(w, zrow, col2, k_size);
      }
    }
    for (std::int32_t i = 0; i < t_size; ++i) {
      const double* zrow = st.zeta.data() + static_cast<std::size_t>(i) * k_size;
      ker.axpy(1.0, zrow, a_stat.data(), k_size);
      double tail = 0.0;
      for (std::int32_t k = k_size - 1; k >= 0; --k) {
        b_stat[k] += tail;
        tail += zrow[k];
      }
    }
  }

  std::vector<double> hat(model.V);
  for (std::int32_t k = 0; k < k_size; ++k) {
    for (std::int32_t v = 0; v < model.V; ++v)
      hat[v] = model.eta + scale * stats_t[static_cast<std::size_t>(v) * k_size + k];
    double* lam = model.row(k);
    ker.scale(lam, 1.0 - rho, model.V);
    ker.axpy(rho, hat.data(), lam, model.V);
  }
  for (std::int32_t k = 0; k < k_size; ++k) {
    model.a[k] = (1.0 - rho) * model.a[k] + rho * (1.0 + scale * a_stat[k]);
    model.b[k] =
        (1.0 - rho) * model.b[k] + rho * (model.omega + scale * b_stat[k]);
  }
}

HdpBModel hdp_svi(std::span<const BobDocument> docs, const HdpSviConfig& config,
                  const HdpStepCallback& on_step) {
  if (docs.empty()) {
    throw std::invalid_argument("hdp_svi: empty corpus");
  }
  if (config.batch_size < 1 || config.epochs < 1) {
    throw std::invalid_argument("hdp_svi: bad batch_size or epochs");
  }
  HdpBModel model = hdp_init_model(config.K, config.T, config.V, config.omega,
                                   config.alpha, config.eta, config.seed);
  const double D =
      config.D > 0.0 ? config.D : static_cast<double>(docs.size());
  std::int64_t t = 1;
  std::size_t seen = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t lo = 0; lo < docs.size(); lo += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, docs.size() - lo);
      std::vector<BobDocument> kept;
      kept.reserve(len);
      for (std::size_t i = lo; i < lo + len; ++i)
        if (!docs[i].terms.empty()) kept.push_back(docs[i]);
      seen += len;
      if (kept.empty()) continue;
      const auto locals = run_hdp_locals(kept, model, config.local_tol,
                                         config.local_max_iters, config.workers);
      const double rho = learning_rate(config.tau, config.kappa, t);
      hdp_global_update(model, kept, locals, D, rho);
      if (on_step) on_step(t, rho, seen, model);
      ++t;
    }
  }
  return model;
}

double hdp_document_elbo(const BobDocument& doc, const HdpBModel& model,
                         const TopicExpectations& expect,
                         std::span<const double> elog_sigma_v,
                         const HdpLocalState& local) {
  const auto& ker = kernels::active();
  const std::int32_t t_size = model.T;
  const std::int32_t k_size = model.K;

  // Topic indices c_di: prior under the corpus sticks, minus entropy.
  double elbo = 0.0;
  for (std::int32_t i = 0; i < t_size; ++i) {
    const double* zrow = local.zeta.data() + static_cast<std::size_t>(i) * k_size;
    elbo += ker.dot(zrow, elog_sigma_v.data(), k_size);
    elbo -= entropy_term(zrow, k_size);
  }

  // Document sticks pi_di for i < T (the last stick is pinned to 1):
  // E[log p(pi|alpha)] - E[log q(pi)] with Beta(1, alpha) prior.
  for (std::int32_t i = 0; i + 1 < t_size; ++i) {
    const double g1 = local.gamma1[i];
    const double g2 = local.gamma2[i];
    const double psi_total = kernels::digamma(g1 + g2);
    const double elog_pi = kernels::digamma(g1) - psi_total;
    const double elog_1mpi = kernels::digamma(g2) - psi_total;
    elbo += std::log(model.alpha) + (model.alpha - 1.0) * elog_1mpi;
    elbo += std::lgamma(g1) + std::lgamma(g2) - std::lgamma(g1 + g2);
    elbo -= (g1 - 1.0) * elog_pi + (g2 - 1.0) * elog_1mpi;
  }

  // Assignments z: stick prior, likelihood through zeta, entropy.
  const std::vector<double> sigma_pi =
      stick_expectations(local.gamma1, local.gamma2, true);
  for (std::size_t n = 0; n < doc.terms.size(); ++n) {
    const double* row = local.phi.data() + n * t_size;
    const double* beta_w = expect.word(doc.terms[n].first);
    double s = ker.dot(row, sigma_pi.data(), t_size) - entropy_term(row, t_size);
    for (std::int32_t i = 0; i < t_size; ++i)
      s += row[i] * ker.dot(local.zeta.data() +
                                static_cast<std::size_t>(i) * k_size,
                            beta_w, k_size);
    elbo += static_cast<double>(doc.terms[n].second) * s;
  }
  for (std::size_t b = 0; b < doc.biterms.size(); ++b) {
    const auto& bt = doc.biterms[b];
    const double* row = local.phi_tilde.data() + b * t_size;
    const double* beta_1 = expect.word(bt.w1);
    const double* beta_2 = expect.word(bt.w2);
    double s = ker.dot(row, sigma_pi.data(), t_size) - entropy_term(row, t_size);
    for (std::int32_t i = 0; i < t_size; ++i) {
      const double* zrow =
          local.zeta.data() + static_cast<std::size_t>(i) * k_size;
      s += row[i] * (ker.dot(zrow, beta_1, k_size) +
                     ker.dot(zrow, beta_2, k_size));
    }
    elbo += 2.0 * static_cast<double>(bt.m) * s;
  }
  return elbo;
}

void save_checkpoint(const HdpBModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.16e %.16e %.16e", model.omega, model.alpha,
                model.eta);
  out << model.K << ' ' << model.T << ' ' << buf << '\n';
  auto write_row = [&](const double* row, std::int32_t n) {
    for (std::int32_t v = 0; v < n; ++v) {
      std::snprintf(buf, sizeof(buf), "%.16e", row[v]);
      if (v) out << '\t';
      out << buf;
    }
    out << '\n';
  };
  for (std::int32_t k = 0; k < model.K; ++k) write_row(model.row(k), model.V);
  write_row(model.a.data(), model.K);
  write_row(model.b.data(), model.K);
}

HdpBModel load_hdp_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("empty checkpoint " + path);
  std::istringstream hs(header);
  std::int64_t k = 0, t = 0;
  double omega = 0.0, alpha = 0.0, eta = 0.0;
  if (!(hs >> k >> t >> omega >> alpha >> eta) || k < 1 || t < 1 || t > k)
    throw std::runtime_error("bad checkpoint header in " + path);
  std::string extra;
  if (hs >> extra)
    throw std::runtime_error("unexpected extra header field in " + path);

  // The first lambda row fixes V; the header does not repeat it.
  std::string first_row;
  if (!std::getline(in, first_row))
    throw std::runtime_error("truncated checkpoint " + path);
  HdpBModel model;
  model.K = static_cast<std::int32_t>(k);
  model.T = static_cast<std::int32_t>(t);
  model.omega = omega;
  model.alpha = alpha;
  model.eta = eta;
  {
    std::istringstream rs(first_row);
    double x;
    while (rs >> x) model.lambda.push_back(x);
  }
  if (model.lambda.empty())
    throw std::runtime_error("bad checkpoint matrix in " + path);
  model.V = static_cast<std::int32_t>(model.lambda.size());
  model.lambda.resize(static_cast<std::size_t>(model.K) * model.V);
  for (std::size_t i = static_cast<std::size_t>(model.V);
       i < model.lambda.size(); ++i)
    if (!(in >> model.lambda[i]))
      throw std::runtime_error("truncated checkpoint " + path);
  model.a.resize(model.K);
  model.b.resize(model.K);
  for (auto& x : model.a)
    if (!(in >> x)) throw std::runtime_error("truncated checkpoint " + path);
  for (auto& x : model.b)
    if (!(in >> x)) throw std::runtime_error("truncated checkpoint " + path);
  return model;
}

}  // namespace bbm
