#include "flexload/hsmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flexload/distributions.hpp"
#include "flexload/errors.hpp"

namespace flexload::hsmm {

double HsmmModel::initial_prob(std::size_t j) const {
  if (initial.empty()) return 1.0 / static_cast<double>(num_states());
  return initial[j];
}

void HsmmModel::validate() const {
  const std::size_t J = theta.size();
  require(J >= 1, "hsmm: need at least one state");
  require(pi.rows() == J && pi.cols() == J, "hsmm: transition matrix shape");
  require(durations.size() == J, "hsmm: one duration law per state");
  require(sigma2 > 0.0, "hsmm: sigma2 must be positive");
  require(initial.empty() || initial.size() == J, "hsmm: initial distribution length");
  for (std::size_t i = 0; i < J; ++i) {
    require(pi(i, i) == 0.0, "hsmm: self-transition probability must be zero");
    double s = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      require(pi(i, j) >= 0.0, "hsmm: negative transition probability");
      s += pi(i, j);
    }
    require(J == 1 || std::abs(s - 1.0) < 1e-9, "hsmm: transition row does not sum to one");
  }
}

HsmmModel HsmmParams::model() const {
  HsmmModel m;
  m.pi = pi;
  m.theta = theta;
  m.sigma2 = sigma2;
  m.initial = initial;
  m.durations.reserve(durations.size());
  for (const auto& w : durations) m.durations.push_back(DurationPmf::from_params(w, form));
  return m;
}

std::vector<int> SegmentPath::expand() const {
  std::vector<int> x;
  x.reserve(T);
  for (std::size_t s = 0; s < z.size() && x.size() < T; ++s)
    for (std::int64_t d = 0; d < D[s] && x.size() < T; ++d) x.push_back(z[s]);
  return x;
}

bool SegmentPath::valid() const {
  if (z.empty() || z.size() != D.size() || T == 0) return false;
  std::int64_t before = 0;
  for (std::size_t s = 0; s < z.size(); ++s) {
    if (D[s] < 1) return false;
    if (s > 0 && z[s] == z[s - 1]) return false;
    if (s + 1 < z.size()) before += D[s];
  }
  const auto TT = static_cast<std::int64_t>(T);
  return before < TT && before + D.back() >= TT;
}

std::vector<std::int64_t> SegmentPath::durations_of(int j) const {
  std::vector<std::int64_t> out;
  for (std::size_t s = 0; s < z.size(); ++s)
    if (z[s] == j) out.push_back(D[s]);
  return out;
}

HsmmSimulation simulate_hsmm(const HsmmModel& model, std::size_t T, Rng& rng) {
  model.validate();
  require(T >= 1, "hsmm: T must be >= 1");
  const std::size_t J = model.num_states();
  HsmmSimulation sim;
  sim.path.T = T;
  std::vector<double> init(J);
  for (std::size_t j = 0; j < J; ++j) init[j] = model.initial_prob(j);
  int z = static_cast<int>(categorical_sample(rng, init));
  std::int64_t covered = 0;
  const auto TT = static_cast<std::int64_t>(T);
  while (covered < TT) {
    if (!sim.path.z.empty()) {
      require(J > 1, "hsmm: a single state cannot transition");
      z = static_cast<int>(categorical_sample(rng, model.pi.row(z)));
    }
    const std::int64_t d = model.durations[z].sample(rng);
    sim.path.z.push_back(z);
    sim.path.D.push_back(d);
    covered += d;
  }
  const auto x = sim.path.expand();
  sim.y.resize(T);
  for (std::size_t t = 0; t < T; ++t) sim.y[t] = std::max(0.0, normal_sample(rng, model.theta[x[t]], model.sigma2));
  return sim;
}

namespace {
double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }
}  // namespace

HsmmMessages hsmm_backward_messages(const HsmmModel& model, std::span<const double> y,
                                    std::optional<std::int64_t> max_duration) {
  model.validate();
  require(!y.empty(), "hsmm: empty observations");
  const std::size_t T = y.size(), J = model.num_states();
  const auto TT = static_cast<std::int64_t>(T);
  HsmmMessages m;
  if (max_duration) require(*max_duration >= 1, "hsmm: max duration must be >= 1");
  m.window = max_duration ? std::min(*max_duration, TT) : TT;
  const std::int64_t W = m.window;

  m.cum = Table(T + 1, J, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < J; ++j)
      m.cum(t + 1, j) = m.cum(t, j) + normal_logpdf(y[t], model.theta[j], model.sigma2);

  m.log_pmf = Table(J, static_cast<std::size_t>(W));
  m.log_tail = Table(J, static_cast<std::size_t>(W) + 1);
  std::vector<double> lp, lt;
  for (std::size_t j = 0; j < J; ++j) {
    model.durations[j].tabulate(W, lp, lt);
    std::copy(lp.begin(), lp.end(), m.log_pmf.row(j).begin());
    std::copy(lt.begin(), lt.end(), m.log_tail.row(j).begin());
    if (W < TT) m.truncation_error = std::max(m.truncation_error, std::exp(lt[W]));
  }

  Table logpi(J, J);
  for (std::size_t i = 0; i < J; ++i)
    for (std::size_t j = 0; j < J; ++j) logpi(i, j) = safe_log(model.pi(i, j));

  m.B = Table(T + 1, J, kNegInf);
  m.Bstar = Table(T, J, kNegInf);
  for (std::size_t j = 0; j < J; ++j) m.B(T, j) = 0.0;
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(W) + 1);
  for (std::size_t t = T; t-- > 0;) {
    const std::int64_t remain = TT - static_cast<std::int64_t>(t);
    const std::int64_t dmax = std::min(remain, W);
    for (std::size_t i = 0; i < J; ++i) {
      buf.clear();
      for (std::int64_t d = 1; d <= dmax; ++d) {
        const std::size_t e = t + static_cast<std::size_t>(d);
        buf.push_back(m.B(e, i) + m.log_pmf(i, d - 1) + m.cum(e, i) - m.cum(t, i));
      }
      if (remain <= W) buf.push_back(m.log_tail(i, remain) + m.cum(T, i) - m.cum(t, i));
      m.Bstar(t, i) = log_sum_exp(buf);
    }
    for (std::size_t i = 0; i < J; ++i) {
      buf.clear();
      for (std::size_t j = 0; j < J; ++j) buf.push_back(m.Bstar(t, j) + logpi(i, j));
      m.B(t, i) = log_sum_exp(buf);
    }
  }
  return m;
}

HsmmForward hsmm_forward_messages(const HsmmModel& model, const HsmmMessages& m) {
  const std::size_t T = m.length(), J = model.num_states();
  const std::int64_t W = m.window;
  HsmmForward f;
  f.F = Table(T + 1, J, kNegInf);
  f.Fstar = Table(T + 1, J, kNegInf);
  for (std::size_t j = 0; j < J; ++j) f.Fstar(0, j) = safe_log(model.initial_prob(j));
  std::vector<double> buf;
  for (std::size_t t = 1; t <= T; ++t) {
    const std::int64_t dmax = std::min<std::int64_t>(static_cast<std::int64_t>(t), W);
    for (std::size_t j = 0; j < J; ++j) {
      buf.clear();
      for (std::int64_t d = 1; d <= dmax; ++d) {
        const std::size_t s = t - static_cast<std::size_t>(d);
        buf.push_back(f.Fstar(s, j) + m.log_pmf(j, d - 1) + m.cum(t, j) - m.cum(s, j));
      }
      f.F(t, j) = log_sum_exp(buf);
    }
    if (t == T) break;
    for (std::size_t j = 0; j < J; ++j) {
      buf.clear();
      for (std::size_t i = 0; i < J; ++i) buf.push_back(f.F(t, i) + safe_log(model.pi(i, j)));
      f.Fstar(t, j) = log_sum_exp(buf);
    }
  }
  return f;
}

double hsmm_log_likelihood(const HsmmModel& model, const HsmmMessages& m) {
  std::vector<double> buf(model.num_states());
  for (std::size_t j = 0; j < buf.size(); ++j) buf[j] = safe_log(model.initial_prob(j)) + m.Bstar(0, j);
  return log_sum_exp(buf);
}

std::vector<SimplexVector> hsmm_state_marginals(const HsmmModel& model, std::span<const double> y,
                                                std::optional<std::int64_t> max_duration) {
  const HsmmMessages m = hsmm_backward_messages(model, y, max_duration);
  const HsmmForward f = hsmm_forward_messages(model, m);
  const double logz = hsmm_log_likelihood(model, m);
  const std::size_t T = y.size(), J = model.num_states();
  // Occupancy by differencing: segments started up to t minus segments ended before t.
  std::vector<double> occ(J, 0.0);
  std::vector<SimplexVector> out;
  out.reserve(T);
  std::vector<double> w(J);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < J; ++j) {
      occ[j] += std::exp(f.Fstar(t, j) + m.Bstar(t, j) - logz);
      if (t > 0) occ[j] -= std::exp(f.F(t, j) + m.B(t, j) - logz);
      w[j] = std::max(0.0, occ[j]);
    }
    out.push_back(SimplexVector::normalize(w));
  }
  return out;
}

SegmentPath blocked_sample_segments(const HsmmModel& model, const HsmmMessages& m, Rng& rng) {
  const std::size_t T = m.length(), J = model.num_states();
  const auto TT = static_cast<std::int64_t>(T);
  const std::int64_t W = m.window;
  SegmentPath path;
  path.T = T;
  std::vector<double> w(J);
  for (std::size_t j = 0; j < J; ++j) w[j] = safe_log(model.initial_prob(j)) + m.Bstar(0, j);
  int z = static_cast<int>(categorical_from_log(rng, w));
  std::size_t t = 0;
  std::vector<double> dw;
  for (;;) {
    const std::int64_t remain = TT - static_cast<std::int64_t>(t);
    const std::int64_t dmax = std::min(remain, W);
    dw.clear();
    for (std::int64_t d = 1; d <= dmax; ++d) {
      const std::size_t e = t + static_cast<std::size_t>(d);
      dw.push_back(m.B(e, z) + m.log_pmf(z, d - 1) + m.seg_loglik(t, e, z));
    }
    const bool can_censor = remain <= W;
    if (can_censor) dw.push_back(m.log_tail(z, remain) + m.seg_loglik(t, T, z));
    const std::size_t k = categorical_from_log(rng, dw);
    std::int64_t D;
    if (can_censor && k + 1 == dw.size())
      D = model.durations[z].sample_greater(rng, remain);
    else
      D = static_cast<std::int64_t>(k) + 1;
    path.z.push_back(z);
    path.D.push_back(D);
    if (D >= remain) break;
    t += static_cast<std::size_t>(D);
    for (std::size_t j = 0; j < J; ++j) w[j] = safe_log(model.pi(z, j)) + m.Bstar(t, j);
    z = static_cast<int>(categorical_from_log(rng, w));
  }
  return path;
}

SegmentPath blocked_sample_segments(const HsmmModel& model, std::span<const double> y, Rng& rng,
                                    std::optional<std::int64_t> max_duration) {
  return blocked_sample_segments(model, hsmm_backward_messages(model, y, max_duration), rng);
}

double clamp_open_unit(double x) {
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(x, lo, hi);
}

DurationParams sample_duration_params(std::span<const std::int64_t> durations, const DurationHyper& hyper,
                                      const DurationParams& current, NegBinForm form, Rng& rng) {
  hyper.validate();
  std::uint64_t n1 = 0, n2 = 0, sum1 = 0, sum2 = 0;
  for (const std::int64_t d : durations) {
    require(d >= 1, "duration: non-positive duration");
    const double a = current.phi > 0.0 ? std::log(current.phi) + poisson_logpmf(d, current.lambda) : kNegInf;
    const double b =
        current.phi < 1.0 ? std::log1p(-current.phi) + negbin_logpmf(d, hyper.r, current.varphi, form) : kNegInf;
    const double w[2] = {a, b};
    if (categorical_from_log(rng, w) == 0) {
      ++n1;
      sum1 += static_cast<std::uint64_t>(d);
    } else {
      ++n2;
      sum2 += static_cast<std::uint64_t>(d);
    }
  }
  DurationParams out;
  out.r = hyper.r;
  const GammaHyper gl = conj_update_gamma_poisson(hyper.lambda, sum1, n1);
  out.lambda = std::max(gamma_sample(rng, gl.shape, gl.rate), std::numeric_limits<double>::min());
  const BetaHyper bv = conj_update_beta_negbin(hyper.varphi, sum2, n2, hyper.r);
  out.varphi = clamp_open_unit(beta_sample(rng, bv.a, bv.b));
  out.phi = clamp_open_unit(beta_sample(rng, hyper.phi.a + static_cast<double>(n1), hyper.phi.b + static_cast<double>(n2)));
  return out;
}

void gibbs_sweep_hsmm(HsmmState& state, const HsmmPriors& priors, std::span<const double> y, Rng& rng,
                      std::optional<std::int64_t> max_duration) {
  auto& p = state.params;
  const std::size_t J = p.num_states();
  require(priors.alpha.size() == J && priors.emission.size() == J && priors.duration.size() == J,
          "hsmm: priors do not match state count");
  const HsmmModel model = p.model();
  state.path = blocked_sample_segments(model, y, rng, max_duration);
  const auto x = state.path.expand();

  std::vector<double> sum(J, 0.0);
  std::vector<std::uint64_t> cnt(J, 0);
  for (std::size_t t = 0; t < y.size(); ++t) {
    sum[x[t]] += y[t];
    ++cnt[x[t]];
  }
  for (std::size_t j = 0; j < J; ++j) {
    const NormalPrior post = conj_update_normal(priors.emission[j], sum[j], cnt[j], p.sigma2);
    p.theta[j] = normal_sample(rng, post.mean, post.var);
  }

  if (J > 1) {
    std::vector<std::vector<std::uint64_t>> n(J, std::vector<std::uint64_t>(J, 0));
    for (std::size_t s = 1; s < state.path.z.size(); ++s) ++n[state.path.z[s - 1]][state.path.z[s]];
    for (std::size_t j = 0; j < J; ++j) {
      std::vector<double> a = priors.alpha;
      a[j] = 0.0;
      const auto row = dirichlet_sample(rng, conj_update_dirichlet(a, n[j]));
      for (std::size_t k = 0; k < J; ++k) p.pi(j, k) = row[k];
    }
  }

  for (std::size_t j = 0; j < J; ++j) {
    const auto ds = state.path.durations_of(static_cast<int>(j));
    p.durations[j] = sample_duration_params(ds, priors.duration[j], p.durations[j], p.form, rng);
  }
}

}  // namespace flexload::hsmm
