#include "flexload/smc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "flexload/distributions.hpp"

namespace flexload::smc {

namespace {

// log p(ybar | joint state) + sum_k log p(x_k | x_prev_k) for every joint
// state. Chain k contributes log_trans[k][s_k] and mean[k][s_k]. Shared by
// the single-chain and factorial paths so K = 1 agrees bit for bit.
double joint_log_terms(std::size_t K, const std::size_t* J, const double* const* log_trans,
                       const double* const* mean, double total_var, double ybar, double* out, std::size_t M) {
  const double c = -0.5 * std::log(2.0 * std::numbers::pi * total_var);
  std::size_t digits[64] = {};
  for (std::size_t s = 0; s < M; ++s) {
    double lt = 0.0;
    double mu = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      lt += log_trans[k][digits[k]];
      mu += mean[k][digits[k]];
    }
    const double r = ybar - mu;
    out[s] = lt + (c - r * r / (2.0 * total_var));
    for (std::size_t k = 0; k < K; ++k) {
      if (++digits[k] < J[k]) break;
      digits[k] = 0;
    }
  }
  return log_sum_exp(std::span<const double>(out, M));
}

void transition_logs(int x_prev, const hmm::HmmParams& zeta, std::vector<double>& out) {
  const std::size_t J = zeta.num_states();
  out.resize(J);
  for (std::size_t l = 0; l < J; ++l)
    out[l] = std::log(x_prev < 0 ? zeta.initial_prob(l) : zeta.pi[static_cast<std::size_t>(x_prev)][l]);
}

double initial_log(std::size_t J) { return std::log(1.0 / static_cast<double>(J)); }

bool should_resample(const FilterOptions& opt, const SimplexVector& w) {
  return !opt.ess_resampling || effective_sample_size(w) < 0.5 * static_cast<double>(w.size());
}

}  // namespace

SimplexVector normalize_log_weights(std::span<const double> logw) {
  require(!logw.empty(), "normalize_log_weights: empty input");
  for (double x : logw)
    if (std::isnan(x)) throw DegeneracyError("importance weight is NaN");
  const double m = log_sum_exp(logw);
  if (!std::isfinite(m)) throw DegeneracyError("all importance weights are zero");
  return SimplexVector::from_log_weights(logw);
}

std::vector<std::size_t> systematic_resample(const SimplexVector& weights, Rng& rng) {
  const std::size_t N = weights.size();
  require(N >= 1, "systematic_resample: no particles");
  std::size_t last = 0;
  for (std::size_t j = 0; j < N; ++j)
    if (weights[j] > 0.0) last = j;
  std::vector<double> cum(N);
  double c = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    c += weights[j];
    cum[j] = j >= last ? 1.0 : c;
  }
  std::vector<std::size_t> counts(N, 0);
  const double u = rng.uniform();
  const double dn = static_cast<double>(N);
  std::size_t j = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double U = (u + static_cast<double>(i)) / dn;
    while (U >= cum[j]) ++j;
    ++counts[j];
  }
  return counts;
}

std::vector<std::size_t> offspring_to_ancestors(std::span<const std::size_t> counts) {
  std::vector<std::size_t> anc;
  for (std::size_t j = 0; j < counts.size(); ++j) anc.insert(anc.end(), counts[j], j);
  return anc;
}

double effective_sample_size(const SimplexVector& weights) {
  double s = 0.0;
  for (double w : weights) s += w * w;
  return 1.0 / s;
}

OptimalProposal optimal_proposal_hmm(int x_prev, const hmm::HmmParams& zeta, double y) {
  const std::size_t J = zeta.num_states();
  require(J > 0, "optimal_proposal_hmm: no states");
  require(x_prev < static_cast<int>(J), "optimal_proposal_hmm: state out of range");
  std::vector<double> lt;
  transition_logs(x_prev, zeta, lt);
  std::vector<double> terms(J);
  const double* lp = lt.data();
  const double* mp = zeta.theta.data();
  OptimalProposal out;
  out.log_predictive = joint_log_terms(1, &J, &lp, &mp, 0.0 + zeta.sigma2, y, terms.data(), J);
  out.proposal = SimplexVector::from_log_weights(terms);
  return out;
}

std::vector<SimplexVector> apf_filter_hmm(const hmm::HmmParams& params, std::span<const double> y, std::size_t N,
                                          Rng& rng, const FilterOptions& opt) {
  params.validate();
  const std::size_t J = params.num_states();
  ApfHooks<int> hooks;
  hooks.log_predictive = [&](const int& prev, double yn) {
    return optimal_proposal_hmm(prev, params, yn).log_predictive;
  };
  hooks.propose = [&](const int& prev, double yn, Rng& r) {
    return static_cast<int>(categorical_sample(r, optimal_proposal_hmm(prev, params, yn).proposal));
  };
  auto e = make_ensemble(std::vector<int>(N, -1));
  std::vector<SimplexVector> out;
  out.reserve(y.size());
  std::vector<double> h(J);
  for (double yn : y) {
    apf_step(e, hooks, yn, rng, opt);
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < N; ++i) h[static_cast<std::size_t>(e.particles[i])] += e.weights[i];
    out.push_back(SimplexVector::normalize(h));
  }
  return out;
}

SufficientStats::SufficientStats(std::size_t num_states)
    : J(num_states), trans(num_states * num_states, 0), emis_sums(num_states, 0.0), emis_counts(num_states, 0) {}

std::uint64_t SufficientStats::total_transitions() const {
  std::uint64_t t = 0;
  for (auto c : trans) t += c;
  return t;
}

std::vector<std::vector<std::uint64_t>> SufficientStats::trans_matrix() const {
  std::vector<std::vector<std::uint64_t>> m(J, std::vector<std::uint64_t>(J));
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t l = 0; l < J; ++l) m[j][l] = n(j, l);
  return m;
}

void ChainPrior::validate() const {
  require(!emission.empty(), "chain prior: no states");
  require(alpha.size() == emission.size(), "chain prior: alpha length must equal the number of states");
  require(sigma2 > 0.0 && std::isfinite(sigma2), "chain prior: sigma2 must be positive");
  bool any = false;
  for (double a : alpha) {
    require(a >= 0.0 && std::isfinite(a), "chain prior: alpha entries must be nonnegative");
    any = any || a > 0.0;
  }
  require(any, "chain prior: alpha is all zero");
  for (const auto& e : emission) require(e.var > 0.0, "chain prior: emission prior variance must be positive");
}

void pl_update_stats(SufficientStats& r, int x_prev, int x_new, double y) {
  require(x_new >= 0 && static_cast<std::size_t>(x_new) < r.J, "pl_update_stats: state out of range");
  require(x_prev < static_cast<int>(r.J), "pl_update_stats: state out of range");
  const auto xn = static_cast<std::size_t>(x_new);
  if (x_prev >= 0) ++r.trans[static_cast<std::size_t>(x_prev) * r.J + xn];
  r.emis_sums[xn] += y;
  ++r.emis_counts[xn];
  ++r.steps;
}

hmm::HmmParams pl_sample_params(const SufficientStats& r, const ChainPrior& prior, Rng& rng) {
  const std::size_t J = prior.num_states();
  require(r.J == J, "pl_sample_params: stats dimension mismatch");
  hmm::HmmParams p;
  p.sigma2 = prior.sigma2;
  p.pi.reserve(J);
  for (std::size_t j = 0; j < J; ++j) {
    const auto post = conj_update_dirichlet(prior.alpha, std::span<const std::uint64_t>(r.trans.data() + j * J, J));
    p.pi.push_back(dirichlet_sample(rng, post));
  }
  p.theta.resize(J);
  for (std::size_t j = 0; j < J; ++j) {
    const auto post = conj_update_normal(prior.emission[j], r.emis_sums[j], r.emis_counts[j], prior.sigma2);
    p.theta[j] = normal_sample(rng, post.mean, post.var);
  }
  return p;
}

Ensemble<PlParticle> bpf_init(std::size_t N, const ChainPrior& prior, Rng& rng) {
  prior.validate();
  require(N >= 1, "bpf_init: no particles");
  const std::uint64_t key = rng();
  std::vector<PlParticle> ps(N);
  for (std::size_t i = 0; i < N; ++i) {
    Rng prng = Rng::derive(key, {i});
    ps[i].r = SufficientStats(prior.num_states());
    ps[i].zeta = pl_sample_params(ps[i].r, prior, prng);
  }
  return make_ensemble(std::move(ps));
}

void bpf_step(Ensemble<PlParticle>& e, double y, const ChainPrior& prior, Rng& rng, const FilterOptions& opt) {
  const std::size_t N = e.size();
  std::vector<double> logw(N);
  parallel_for(N, opt.workers, [&](std::size_t i) {
    logw[i] = std::log(e.weights[i]) + optimal_proposal_hmm(e.particles[i].x, e.particles[i].zeta, y).log_predictive;
  });
  e.weights = normalize_log_weights(logw);
  std::vector<std::size_t> anc(N);
  if (should_resample(opt, e.weights)) {
    anc = offspring_to_ancestors(systematic_resample(e.weights, rng));
    e.weights = SimplexVector::uniform(N);
  } else {
    for (std::size_t i = 0; i < N; ++i) anc[i] = i;
  }
  const std::uint64_t key = rng();
  std::vector<PlParticle> next(N);
  parallel_for(N, opt.workers, [&](std::size_t i) {
    Rng prng = Rng::derive(key, {i});
    const PlParticle& a = e.particles[anc[i]];
    PlParticle p = a;
    const auto prop = optimal_proposal_hmm(a.x, a.zeta, y);
    p.x = static_cast<int>(categorical_sample(prng, prop.proposal));
    pl_update_stats(p.r, a.x, p.x, y);
    p.zeta = pl_sample_params(p.r, prior, prng);
    next[i] = std::move(p);
  });
  e.particles = std::move(next);
  ++e.n;
}

std::size_t joint_state_count(std::span<const std::size_t> states_per_chain, std::size_t cap) {
  require(!states_per_chain.empty(), "joint state: no chains");
  require(states_per_chain.size() <= 64, "joint state: too many chains");
  std::size_t M = 1;
  for (std::size_t J : states_per_chain) {
    require(J >= 1, "joint state: chain without states");
    if (M > cap / J) throw CapacityError("joint state space exceeds the cap of " + std::to_string(cap));
    M *= J;
  }
  if (M > cap) throw CapacityError("joint state space exceeds the cap of " + std::to_string(cap));
  return M;
}

std::vector<int> decode_joint_state(std::size_t s, std::span<const std::size_t> states_per_chain) {
  std::vector<int> x(states_per_chain.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = static_cast<int>(s % states_per_chain[k]);
    s /= states_per_chain[k];
  }
  return x;
}

FactorialProposal factorial_state_proposal(std::span<const int> x_prev, std::span<const hmm::HmmParams> zeta,
                                           std::span<const double> sigma2, double ybar, std::size_t cap) {
  const std::size_t K = zeta.size();
  require(K >= 1 && x_prev.size() == K && sigma2.size() == K, "factorial proposal: dimension mismatch");
  std::vector<std::size_t> J(K);
  for (std::size_t k = 0; k < K; ++k) J[k] = zeta[k].num_states();
  const std::size_t M = joint_state_count(J, cap);
  std::vector<std::vector<double>> lt(K);
  std::vector<const double*> lp(K), mp(K);
  double S = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    require(sigma2[k] > 0.0, "factorial proposal: variances must be positive");
    transition_logs(x_prev[k], zeta[k], lt[k]);
    lp[k] = lt[k].data();
    mp[k] = zeta[k].theta.data();
    S += sigma2[k];
  }
  std::vector<double> terms(M);
  FactorialProposal out;
  out.log_predictive = joint_log_terms(K, J.data(), lp.data(), mp.data(), S, ybar, terms.data(), M);
  out.probs.resize(M);
  normalize_log_into(terms, out.probs);
  return out;
}

ConditionalNormal conditional_emission_moments(std::span<const double> means, std::span<const double> vars,
                                               double ybar) {
  const std::size_t K = means.size();
  require(K >= 1 && vars.size() == K, "conditional emission: dimension mismatch");
  double S = 0.0, mu = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    require(vars[k] > 0.0, "conditional emission: variances must be positive");
    S += vars[k];
    mu += means[k];
  }
  ConditionalNormal c;
  c.mean.resize(K);
  c.cov = Table(K, K);
  for (std::size_t k = 0; k < K; ++k) {
    c.mean[k] = means[k] + vars[k] * (ybar - mu) / S;
    for (std::size_t l = 0; l < K; ++l) c.cov(k, l) = (k == l ? vars[k] : 0.0) - vars[k] * vars[l] / S;
  }
  return c;
}

void conditional_emission_sample(std::span<const double> means, std::span<const double> vars, double ybar,
                                 Rng& rng, std::span<double> out) {
  const std::size_t K = means.size();
  require(K >= 1 && vars.size() == K && out.size() == K, "conditional emission: dimension mismatch");
  if (K == 1) {
    out[0] = ybar;
    return;
  }
  double S = 0.0, mu = 0.0, zs = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    S += vars[k];
    mu += means[k];
  }
  // y = mean + z - vars * sum(z) / S has the conditional covariance.
  for (std::size_t k = 0; k < K; ++k) {
    out[k] = std::sqrt(vars[k]) * standard_normal(rng);
    zs += out[k];
  }
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    out[k] = means[k] + vars[k] * (ybar - mu) / S + out[k] - vars[k] * zs / S;
    acc += out[k];
  }
  out[K - 1] = ybar - acc;
}

std::vector<double> conditional_emission_sample(std::span<const double> means, std::span<const double> vars,
                                                double ybar, Rng& rng) {
  std::vector<double> out(means.size());
  conditional_emission_sample(means, vars, ybar, rng, out);
  return out;
}

std::vector<double> vote_fractions(std::span<const int> states, std::span<const double> weights, std::size_t J) {
  require(states.size() == weights.size() && J >= 1, "vote: dimension mismatch");
  std::vector<double> v(J, 0.0);
  for (std::size_t i = 0; i < states.size(); ++i) {
    require(states[i] >= 0 && static_cast<std::size_t>(states[i]) < J, "vote: state out of range");
    v[static_cast<std::size_t>(states[i])] += weights[i];
  }
  return v;
}

int map_vote(std::span<const int> states, std::span<const double> weights, std::size_t J) {
  const auto v = vote_fractions(states, weights, J);
  std::size_t best = 0;
  for (std::size_t j = 1; j < J; ++j)
    if (v[j] > v[best]) best = j;
  return static_cast<int>(best);
}

FactorialFilter::FactorialFilter(FactorialConfig config, Rng& rng) : cfg_(std::move(config)) {
  K_ = cfg_.chains.size();
  N_ = cfg_.particles;
  require(K_ >= 1, "factorial filter: no chains");
  require(N_ >= 1, "factorial filter: no particles");
  J_.resize(K_);
  layout_.resize(K_);
  stride_ = 0;
  for (std::size_t k = 0; k < K_; ++k) {
    cfg_.chains[k].validate();
    const std::size_t J = cfg_.chains[k].num_states();
    J_[k] = J;
    Layout& L = layout_[k];
    L.trans = stride_;
    L.sums = L.trans + J * J;
    L.counts = L.sums + J;
    L.pi = L.counts + J;
    L.theta = L.pi + J * J;
    stride_ = L.theta + J;
    total_var_ += cfg_.chains[k].sigma2;
  }
  M_ = joint_state_count(J_, cfg_.joint_cap);
  x_.assign(N_ * K_, -1);
  x_next_ = x_;
  y_.assign(N_ * K_, 0.0);
  y_next_ = y_;
  store_.assign(N_ * stride_, 0.0);
  store_next_ = store_;
  log_terms_.assign(N_ * M_, 0.0);
  log_pred_.assign(N_, 0.0);
  weights_ = SimplexVector::uniform(N_);
  const std::uint64_t key = rng();
  for (std::size_t i = 0; i < N_; ++i) {
    Rng prng = Rng::derive(key, {i});
    sample_params(block(i), prng);
  }
}

void FactorialFilter::sample_params(double* blk, Rng& rng) const {
  thread_local std::vector<double> post;
  for (std::size_t k = 0; k < K_; ++k) {
    const ChainPrior& pr = cfg_.chains[k];
    const Layout& L = layout_[k];
    const std::size_t J = J_[k];
    post.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t l = 0; l < J; ++l) post[l] = pr.alpha[l] + blk[L.trans + j * J + l];
      dirichlet_sample_into(rng, post, std::span<double>(blk + L.pi + j * J, J));
    }
    for (std::size_t j = 0; j < J; ++j) {
      const auto cp = conj_update_normal(pr.emission[j], blk[L.sums + j],
                                         static_cast<std::uint64_t>(blk[L.counts + j]), pr.sigma2);
      blk[L.theta + j] = normal_sample(rng, cp.mean, cp.var);
    }
  }
}

double FactorialFilter::joint_terms(std::size_t i, double ybar, double* out) const {
  thread_local std::vector<double> lt;
  const double* lp[64];
  const double* mp[64];
  const double* blk = block(i);
  std::size_t total = 0;
  for (std::size_t k = 0; k < K_; ++k) total += J_[k];
  lt.resize(total);
  std::size_t off = 0;
  for (std::size_t k = 0; k < K_; ++k) {
    const int xp = x_[i * K_ + k];
    const std::size_t J = J_[k];
    for (std::size_t l = 0; l < J; ++l)
      lt[off + l] = xp < 0 ? initial_log(J) : std::log(blk[layout_[k].pi + static_cast<std::size_t>(xp) * J + l]);
    lp[k] = lt.data() + off;
    mp[k] = blk + layout_[k].theta;
    off += J;
  }
  return joint_log_terms(K_, J_.data(), lp, mp, total_var_, ybar, out, M_);
}

void FactorialFilter::step(double ybar, Rng& rng) {
  require(std::isfinite(ybar), "factorial filter: observation must be finite");
  const auto& opt = cfg_.options;
  std::vector<double> logw(N_);
  parallel_for(N_, opt.workers, [&](std::size_t i) {
    log_pred_[i] = joint_terms(i, ybar, log_terms_.data() + i * M_);
    logw[i] = std::log(weights_[i]) + log_pred_[i];
  });
  weights_ = normalize_log_weights(logw);
  std::vector<std::size_t> anc(N_);
  if (should_resample(opt, weights_)) {
    anc = offspring_to_ancestors(systematic_resample(weights_, rng));
    weights_ = SimplexVector::uniform(N_);
  } else {
    for (std::size_t i = 0; i < N_; ++i) anc[i] = i;
  }
  const std::uint64_t key = rng();
  const bool first = n_ == 0;
  parallel_for(N_, opt.workers, [&](std::size_t i) {
    thread_local std::vector<double> probs, means, vars;
    Rng prng = Rng::derive(key, {i});
    const std::size_t a = anc[i];
    double* blk = store_next_.data() + i * stride_;
    std::copy(block(a), block(a) + stride_, blk);
    probs.resize(M_);
    normalize_log_into(std::span<const double>(log_terms_.data() + a * M_, M_), probs);
    std::size_t s = categorical_sample(prng, probs);
    means.resize(K_);
    vars.resize(K_);
    int* xn = x_next_.data() + i * K_;
    for (std::size_t k = 0; k < K_; ++k) {
      xn[k] = static_cast<int>(s % J_[k]);
      s /= J_[k];
      means[k] = blk[layout_[k].theta + static_cast<std::size_t>(xn[k])];
      vars[k] = cfg_.chains[k].sigma2;
    }
    double* yn = y_next_.data() + i * K_;
    conditional_emission_sample(means, vars, ybar, prng, std::span<double>(yn, K_));
    for (std::size_t k = 0; k < K_; ++k) {
      const Layout& L = layout_[k];
      const auto xk = static_cast<std::size_t>(xn[k]);
      const int xp = x_[a * K_ + k];
      if (!first) blk[L.trans + static_cast<std::size_t>(xp) * J_[k] + xk] += 1.0;
      blk[L.sums + xk] += yn[k];
      blk[L.counts + xk] += 1.0;
    }
    sample_params(blk, prng);
  });
  store_.swap(store_next_);
  x_.swap(x_next_);
  y_.swap(y_next_);
  ++n_;
}

double FactorialFilter::theta(std::size_t i, std::size_t k, std::size_t j) const {
  return block(i)[layout_[k].theta + j];
}

double FactorialFilter::pi(std::size_t i, std::size_t k, std::size_t j, std::size_t l) const {
  return block(i)[layout_[k].pi + j * J_[k] + l];
}

SufficientStats FactorialFilter::stats(std::size_t i, std::size_t k) const {
  const std::size_t J = J_[k];
  const Layout& L = layout_[k];
  const double* blk = block(i);
  SufficientStats r(J);
  for (std::size_t c = 0; c < J * J; ++c) r.trans[c] = static_cast<std::uint64_t>(blk[L.trans + c]);
  for (std::size_t j = 0; j < J; ++j) {
    r.emis_sums[j] = blk[L.sums + j];
    r.emis_counts[j] = static_cast<std::uint64_t>(blk[L.counts + j]);
  }
  r.steps = n_;
  return r;
}

hmm::HmmParams FactorialFilter::params(std::size_t i, std::size_t k) const {
  const std::size_t J = J_[k];
  hmm::HmmParams p;
  p.sigma2 = cfg_.chains[k].sigma2;
  for (std::size_t j = 0; j < J; ++j) {
    const double* row = block(i) + layout_[k].pi + j * J;
    p.pi.emplace_back(std::vector<double>(row, row + J));
  }
  p.theta.assign(block(i) + layout_[k].theta, block(i) + layout_[k].theta + J);
  return p;
}

std::vector<ChainEstimate> FactorialFilter::estimate() const {
  std::vector<ChainEstimate> out(K_);
  std::vector<int> states(N_);
  for (std::size_t k = 0; k < K_; ++k) {
    ChainEstimate& e = out[k];
    const std::size_t J = J_[k];
    e.vote.assign(J, 0.0);
    e.theta_mean.assign(J, 0.0);
    for (std::size_t i = 0; i < N_; ++i) {
      const double w = weights_[i];
      states[i] = x_[i * K_ + k];
      if (states[i] >= 0) e.vote[static_cast<std::size_t>(states[i])] += w;
      for (std::size_t j = 0; j < J; ++j) e.theta_mean[j] += w * theta(i, k, j);
      e.power_mean += w * y_[i * K_ + k];
    }
    e.map_state = n_ == 0 ? 0 : map_vote(states, weights_.weights(), J);
  }
  return out;
}

}  // namespace flexload::smc
