#include "flexload/hdp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <boost/math/special_functions/digamma.hpp>

#include "flexload/distributions.hpp"
#include "flexload/errors.hpp"

namespace flexload::hdp {

using boost::multiprecision::cpp_int;

void WeakLimitHdp::validate() const {
  require(L >= 1, "hdp: L must be >= 1");
  require(gamma > 0.0 && alpha > 0.0, "hdp: concentrations must be positive");
  require(beta.size() == L && pi.size() == L, "hdp: dimension mismatch");
  for (const auto& row : pi) require(row.size() == L, "hdp: transition row length");
}

WeakLimitHdp make_weak_limit_hdp(std::size_t L, double gamma, double alpha, Rng& rng) {
  require(L >= 1, "hdp: L must be >= 1");
  require(gamma > 0.0 && alpha > 0.0, "hdp: concentrations must be positive");
  WeakLimitHdp h;
  h.L = L;
  h.gamma = gamma;
  h.alpha = alpha;
  h.n.assign(L, std::vector<std::uint64_t>(L, 0));
  h.m = h.n;
  h.rho.assign(L, {});
  h.beta = sample_beta_posterior(h.m, gamma, L, rng);
  for (std::size_t j = 0; j < L; ++j) h.pi.push_back(sample_pi_posterior(h.beta, alpha, h.n[j], rng));
  return h;
}

cpp_int stirling_unsigned(unsigned n, unsigned m) {
  require(n <= 30, "stirling: n above the supported range");
  if (m > n) return 0;
  // Row-by-row recurrence |s(k+1, i)| = |s(k, i-1)| + k |s(k, i)|.
  std::vector<cpp_int> row{1};
  for (unsigned k = 0; k < n; ++k) {
    std::vector<cpp_int> next(k + 2, 0);
    for (unsigned i = 0; i <= k + 1; ++i) {
      if (i >= 1) next[i] += row[i - 1];
      if (i <= k) next[i] += cpp_int(k) * row[i];
    }
    row = std::move(next);
  }
  return row[m];
}

std::uint64_t sample_m(std::uint64_t n, double weight, Rng& rng) {
  require(weight > 0.0, "sample_m: weight must be positive");
  constexpr std::uint64_t kExact = 100000;
  std::uint64_t m = 0;
  const std::uint64_t head = std::min(n, kExact);
  for (std::uint64_t i = 0; i < head; ++i)
    if (rng.uniform() * (static_cast<double>(i) + weight) < weight) ++m;
  if (n > head) {
    // Remaining Bernoulli probabilities are below weight/1e5; their sum is
    // Poisson with mean weight (digamma(n + w) - digamma(head + w)).
    const double mean = weight * (boost::math::digamma(static_cast<double>(n) + weight) -
                                  boost::math::digamma(static_cast<double>(head) + weight));
    m += static_cast<std::uint64_t>(poisson_sample(rng, mean));
  }
  return m;
}

std::vector<std::uint64_t> sample_rho(double pi_jj, std::uint64_t count, Rng& rng) {
  if (count == 0) return {};
  require(pi_jj >= 0.0 && pi_jj < 1.0, "sample_rho: pi_jj must lie in [0,1)");
  std::vector<std::uint64_t> out(count);
  for (auto& r : out) r = static_cast<std::uint64_t>(geometric_sample(rng, 1.0 - pi_jj));
  return out;
}

SimplexVector sample_beta_posterior(const CountMatrix& m, double gamma, std::size_t L, Rng& rng) {
  require(gamma > 0.0, "beta posterior: gamma must be positive");
  require(m.size() == L, "beta posterior: m has wrong shape");
  std::vector<double> a(L, gamma / static_cast<double>(L));
  for (std::size_t k = 0; k < L; ++k) {
    require(m[k].size() == L, "beta posterior: m has wrong shape");
    for (std::size_t j = 0; j < L; ++j) a[j] += static_cast<double>(m[k][j]);
  }
  return dirichlet_sample(rng, a);
}

SimplexVector sample_pi_posterior(const SimplexVector& beta, double alpha, std::span<const std::uint64_t> n_row,
                                  Rng& rng) {
  require(alpha > 0.0, "pi posterior: alpha must be positive");
  require(n_row.size() == beta.size(), "pi posterior: dimension mismatch");
  std::vector<double> a(beta.size());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = alpha * beta[k];
  return dirichlet_sample(rng, conj_update_dirichlet(a, n_row));
}

void hdp_sweep(WeakLimitHdp& h, const CountMatrix& transitions, Rng& rng) {
  h.validate();
  const std::size_t L = h.L;
  require(transitions.size() == L, "hdp sweep: transition counts have wrong shape");
  h.n.assign(L, std::vector<std::uint64_t>(L, 0));
  h.rho.assign(L, {});
  for (std::size_t j = 0; j < L; ++j) {
    require(transitions[j].size() == L, "hdp sweep: transition counts have wrong shape");
    std::uint64_t out = 0;
    for (std::size_t k = 0; k < L; ++k)
      if (k != j) {
        h.n[j][k] = transitions[j][k];
        out += transitions[j][k];
      }
    h.rho[j] = sample_rho(std::min(h.pi[j][j], std::nextafter(1.0, 0.0)), out, rng);
    for (auto r : h.rho[j]) h.n[j][j] += r;
  }
  h.m.assign(L, std::vector<std::uint64_t>(L, 0));
  for (std::size_t k = 0; k < L; ++k)
    for (std::size_t j = 0; j < L; ++j)
      if (h.n[k][j] > 0) h.m[k][j] = sample_m(h.n[k][j], h.alpha * h.beta[j], rng);
  h.beta = sample_beta_posterior(h.m, h.gamma, L, rng);
  // Rows are conditionally independent given beta; each gets a derived stream.
  const std::uint64_t key = rng();
  for (std::size_t j = 0; j < L; ++j) {
    Rng row_rng = Rng::derive(key, {j});
    h.pi[j] = sample_pi_posterior(h.beta, h.alpha, h.n[j], row_rng);
  }
}

Table normalized_offdiag(const std::vector<SimplexVector>& pi) {
  const std::size_t L = pi.size();
  Table out(L, L, 0.0);
  for (std::size_t j = 0; j < L; ++j) {
    if (L == 1) break;
    double s = 0.0;
    for (std::size_t k = 0; k < L; ++k)
      if (k != j) s += pi[j][k];
    if (s <= 0.0) {
      // All off-diagonal mass underflowed: fall back to uniform jumps.
      for (std::size_t k = 0; k < L; ++k)
        if (k != j) out(j, k) = 1.0 / static_cast<double>(L - 1);
      continue;
    }
    for (std::size_t k = 0; k < L; ++k)
      if (k != j) out(j, k) = pi[j][k] / s;
  }
  return out;
}

CountMatrix superstate_transitions(std::span<const int> z, std::size_t L) {
  CountMatrix n(L, std::vector<std::uint64_t>(L, 0));
  for (std::size_t s = 1; s < z.size(); ++s) ++n[z[s - 1]][z[s]];
  return n;
}

void EmissionMixturePrior::validate() const {
  require(!components.empty() && weights.size() == components.size(), "emission prior: weight/component mismatch");
  require(!duration_components.empty() && duration_weights.size() == duration_components.size(),
          "emission prior: duration weight/component mismatch");
  for (const auto& c : components) require(c.var > 0.0, "emission prior: variance must be positive");
  for (const auto& d : duration_components) d.validate();
}

hsmm::HsmmModel HdpHsmmState::model(const HdpHsmmConfig& cfg) const {
  hsmm::HsmmModel m;
  m.pi = normalized_offdiag(hdp.pi);
  m.theta = theta;
  m.sigma2 = cfg.sigma2;
  m.initial = hdp.beta;
  for (const auto& w : durations) m.durations.push_back(DurationPmf::from_params(w, cfg.form));
  return m;
}

std::size_t HdpHsmmState::utilized_states() const {
  return std::set<int>(path.z.begin(), path.z.end()).size();
}

namespace {

double log_prior_density(const DurationParams& w, const DurationHyper& h) {
  return beta_logpdf(w.phi, h.phi.a, h.phi.b) + gamma_logpdf(w.lambda, h.lambda.shape, h.lambda.rate) +
         beta_logpdf(w.varphi, h.varphi.a, h.varphi.b);
}

DurationParams prior_duration_draw(const DurationHyper& h, NegBinForm form, Rng& rng) {
  return hsmm::sample_duration_params({}, h, DurationParams{0.5, 1.0, h.r, 0.5}, form, rng);
}

// log p(data) under theta ~ N(mu, tau2), y ~ N(theta, sigma2), via Bayes' rule at the posterior mean.
double log_marginal_normal(const NormalPrior& prior, std::span<const double> data, double sigma2) {
  double sum = 0.0;
  for (double v : data) sum += v;
  const NormalPrior post = conj_update_normal(prior, sum, data.size(), sigma2);
  double ll = 0.0;
  for (double v : data) ll += normal_logpdf(v, post.mean, sigma2);
  return ll + normal_logpdf(post.mean, prior.mean, prior.var) - normal_logpdf(post.mean, post.mean, post.var);
}

}  // namespace

HdpHsmmState init_hdphsmm(const HdpHsmmConfig& cfg, std::size_t T, Rng& rng) {
  cfg.prior.validate();
  require(cfg.sigma2 > 0.0, "hdp-hsmm: sigma2 must be positive");
  HdpHsmmState st;
  st.hdp = make_weak_limit_hdp(cfg.L, cfg.gamma, cfg.alpha, rng);
  for (std::size_t j = 0; j < cfg.L; ++j) {
    const int c = static_cast<int>(categorical_sample(rng, cfg.prior.weights));
    st.emission_labels.push_back(c);
    const auto& p = cfg.prior.components[c];
    st.theta.push_back(normal_sample(rng, p.mean, p.var));
    const int dc = static_cast<int>(categorical_sample(rng, cfg.prior.duration_weights));
    st.duration_labels.push_back(dc);
    st.durations.push_back(prior_duration_draw(cfg.prior.duration_components[dc], cfg.form, rng));
  }
  st.path = hsmm::simulate_hsmm(st.model(cfg), T, rng).path;
  return st;
}

void gibbs_sweep_hdphsmm(HdpHsmmState& st, const HdpHsmmConfig& cfg, std::span<const double> y, Rng& rng) {
  const std::size_t L = cfg.L;
  require(st.theta.size() == L && st.durations.size() == L, "hdp-hsmm: state does not match L");
  const auto model = st.model(cfg);
  const auto msgs = hsmm::hsmm_backward_messages(model, y, cfg.max_duration);
  st.truncation_error = msgs.truncation_error;
  st.path = hsmm::blocked_sample_segments(model, msgs, rng);

  hdp_sweep(st.hdp, superstate_transitions(st.path.z, L), rng);

  // Emission means: draw the mixture label with theta integrated out, then theta.
  const auto x = st.path.expand();
  std::vector<std::vector<double>> data(L);
  for (std::size_t t = 0; t < y.size(); ++t) data[x[t]].push_back(y[t]);
  const auto& pr = cfg.prior;
  const std::size_t M = pr.components.size();
  std::vector<double> lw(M);
  for (std::size_t j = 0; j < L; ++j) {
    for (std::size_t c = 0; c < M; ++c)
      lw[c] = pr.weights[c] > 0.0 ? std::log(pr.weights[c]) + log_marginal_normal(pr.components[c], data[j], cfg.sigma2)
                                  : kNegInf;
    const auto c = categorical_from_log(rng, lw);
    st.emission_labels[j] = static_cast<int>(c);
    double sum = 0.0;
    for (double v : data[j]) sum += v;
    const NormalPrior post = conj_update_normal(pr.components[c], sum, data[j].size(), cfg.sigma2);
    st.theta[j] = normal_sample(rng, post.mean, post.var);
  }

  // Duration parameters: component label given current w_j and the durations, then w_j.
  const std::size_t Md = pr.duration_components.size();
  std::vector<double> dw(Md);
  for (std::size_t j = 0; j < L; ++j) {
    const auto ds = st.path.durations_of(static_cast<int>(j));
    for (std::size_t c = 0; c < Md; ++c) {
      const auto& h = pr.duration_components[c];
      if (pr.duration_weights[c] <= 0.0) {
        dw[c] = kNegInf;
        continue;
      }
      DurationParams w = st.durations[j];
      w.r = h.r;
      const auto law = DurationPmf::from_params(w, cfg.form);
      double ll = std::log(pr.duration_weights[c]) + log_prior_density(w, h);
      for (auto d : ds) ll += law.log_pmf(d);
      dw[c] = ll;
    }
    const auto c = categorical_from_log(rng, dw);
    st.duration_labels[j] = static_cast<int>(c);
    const auto& h = pr.duration_components[c];
    DurationParams cur = st.durations[j];
    cur.r = h.r;
    st.durations[j] = hsmm::sample_duration_params(ds, h, cur, cfg.form, rng);
  }
}

}  // namespace flexload::hdp
