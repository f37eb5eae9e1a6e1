#include "flexload/hmm.hpp"

#include <algorithm>
#include <cmath>

#include "flexload/distributions.hpp"
#include "flexload/errors.hpp"

namespace flexload::hmm {

double HmmParams::initial_prob(std::size_t j) const {
  if (initial.empty()) return 1.0 / static_cast<double>(num_states());
  return initial[j];
}

void HmmParams::validate() const {
  const std::size_t J = theta.size();
  require(J >= 1, "hmm: need at least one state");
  require(pi.size() == J, "hmm: transition matrix has wrong number of rows");
  for (const auto& row : pi) require(row.size() == J, "hmm: transition row has wrong length");
  require(sigma2 > 0.0, "hmm: sigma2 must be positive");
  require(initial.empty() || initial.size() == J, "hmm: initial distribution has wrong length");
}

HmmSimulation simulate_hmm(const HmmParams& params, std::size_t T, Rng& rng) {
  params.validate();
  require(T >= 1, "hmm: T must be >= 1");
  const std::size_t J = params.num_states();
  HmmSimulation sim;
  sim.x.resize(T);
  sim.y.resize(T);
  std::vector<double> init(J);
  for (std::size_t j = 0; j < J; ++j) init[j] = params.initial_prob(j);
  int x = static_cast<int>(categorical_sample(rng, init));
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0) x = static_cast<int>(categorical_sample(rng, params.pi[x]));
    sim.x[t] = x;
    sim.y[t] = std::max(0.0, normal_sample(rng, params.theta[x], params.sigma2));
  }
  return sim;
}

Table emission_loglik(const HmmParams& params, std::span<const double> y) {
  const std::size_t J = params.num_states();
  Table e(y.size(), J);
  for (std::size_t t = 0; t < y.size(); ++t)
    for (std::size_t j = 0; j < J; ++j) e(t, j) = normal_logpdf(y[t], params.theta[j], params.sigma2);
  return e;
}

namespace {
Table log_transitions(const HmmParams& p) {
  const std::size_t J = p.num_states();
  Table lp(J, J);
  for (std::size_t i = 0; i < J; ++i)
    for (std::size_t j = 0; j < J; ++j) lp(i, j) = p.pi[i][j] > 0.0 ? std::log(p.pi[i][j]) : kNegInf;
  return lp;
}
}  // namespace

Table forward_messages(const HmmParams& params, std::span<const double> y) {
  params.validate();
  require(!y.empty(), "hmm: empty observations");
  const std::size_t T = y.size(), J = params.num_states();
  const Table e = emission_loglik(params, y);
  const Table lp = log_transitions(params);
  Table f(T, J);
  for (std::size_t j = 0; j < J; ++j) {
    const double p0 = params.initial_prob(j);
    f(0, j) = (p0 > 0.0 ? std::log(p0) : kNegInf) + e(0, j);
  }
  std::vector<double> buf(J);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t i = 0; i < J; ++i) buf[i] = f(t - 1, i) + lp(i, j);
      f(t, j) = log_sum_exp(buf) + e(t, j);
    }
  }
  return f;
}

Table backward_messages(const HmmParams& params, std::span<const double> y) {
  params.validate();
  require(!y.empty(), "hmm: empty observations");
  const std::size_t T = y.size(), J = params.num_states();
  const Table e = emission_loglik(params, y);
  const Table lp = log_transitions(params);
  Table b(T, J, 0.0);
  std::vector<double> buf(J);
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t i = 0; i < J; ++i) {
      for (std::size_t j = 0; j < J; ++j) buf[j] = lp(i, j) + e(t + 1, j) + b(t + 1, j);
      b(t, i) = log_sum_exp(buf);
    }
  }
  return b;
}

double log_likelihood(const Table& forward) { return log_sum_exp(forward.row(forward.rows() - 1)); }

std::vector<SimplexVector> smoothing_marginals(const Table& f, const Table& b) {
  require(f.rows() == b.rows() && f.cols() == b.cols(), "hmm: message shapes differ");
  std::vector<SimplexVector> out;
  out.reserve(f.rows());
  std::vector<double> buf(f.cols());
  for (std::size_t t = 0; t < f.rows(); ++t) {
    for (std::size_t j = 0; j < f.cols(); ++j) buf[j] = f(t, j) + b(t, j);
    out.push_back(SimplexVector::from_log_weights(buf));
  }
  return out;
}

std::vector<SimplexVector> filtering_marginals(const Table& f) {
  std::vector<SimplexVector> out;
  out.reserve(f.rows());
  for (std::size_t t = 0; t < f.rows(); ++t) out.push_back(SimplexVector::from_log_weights(f.row(t)));
  return out;
}

std::vector<int> blocked_sample_states(const HmmParams& params, std::span<const double> y, const Table& b,
                                       Rng& rng) {
  const std::size_t T = y.size(), J = params.num_states();
  require(b.rows() == T && b.cols() == J, "hmm: backward messages do not match observations");
  const Table e = emission_loglik(params, y);
  const Table lp = log_transitions(params);
  std::vector<int> x(T);
  std::vector<double> w(J);
  for (std::size_t j = 0; j < J; ++j) {
    const double p0 = params.initial_prob(j);
    w[j] = (p0 > 0.0 ? std::log(p0) : kNegInf) + e(0, j) + b(0, j);
  }
  x[0] = static_cast<int>(categorical_from_log(rng, w));
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < J; ++j) w[j] = lp(x[t - 1], j) + e(t, j) + b(t, j);
    x[t] = static_cast<int>(categorical_from_log(rng, w));
  }
  return x;
}

std::vector<int> blocked_sample_states(const HmmParams& params, std::span<const double> y, Rng& rng) {
  return blocked_sample_states(params, y, backward_messages(params, y), rng);
}

std::vector<std::vector<std::uint64_t>> transition_counts(std::span<const int> x, std::size_t J) {
  std::vector<std::vector<std::uint64_t>> n(J, std::vector<std::uint64_t>(J, 0));
  for (std::size_t t = 1; t < x.size(); ++t) ++n[x[t - 1]][x[t]];
  return n;
}

void gibbs_sweep_hmm(HmmState& state, const HmmPriors& priors, std::span<const double> y, Rng& rng) {
  auto& p = state.params;
  p.validate();
  const std::size_t J = p.num_states();
  require(priors.alpha.size() == J && priors.emission.size() == J, "hmm: priors do not match state count");
  state.x = blocked_sample_states(p, y, rng);

  std::vector<double> sum(J, 0.0);
  std::vector<std::uint64_t> cnt(J, 0);
  for (std::size_t t = 0; t < y.size(); ++t) {
    sum[state.x[t]] += y[t];
    ++cnt[state.x[t]];
  }
  for (std::size_t j = 0; j < J; ++j) {
    const NormalPrior post = conj_update_normal(priors.emission[j], sum[j], cnt[j], p.sigma2);
    p.theta[j] = normal_sample(rng, post.mean, post.var);
  }
  const auto n = transition_counts(state.x, J);
  for (std::size_t j = 0; j < J; ++j) p.pi[j] = dirichlet_sample(rng, conj_update_dirichlet(priors.alpha, n[j]));
}

}  // namespace flexload::hmm
