#include "flexload/mixture.hpp"

#include <cmath>
#include <limits>

#include "flexload/errors.hpp"
#include "flexload/hsmm.hpp"

namespace flexload {

NormalMeanFamily::NormalMeanFamily(NormalPrior prior, double sigma2) : prior_(prior), sigma2_(sigma2) {
  require(prior.var > 0.0 && sigma2 > 0.0, "normal family: variances must be positive");
}

double NormalMeanFamily::log_density(double x, std::span<const double> param) const {
  return normal_logpdf(x, param[0], sigma2_);
}

std::vector<double> NormalMeanFamily::sample_posterior(std::span<const double> data, Rng& rng) const {
  double s = 0.0;
  for (double x : data) s += x;
  const NormalPrior post = conj_update_normal(prior_, s, data.size(), sigma2_);
  return {normal_sample(rng, post.mean, post.var)};
}

PoissonFamily::PoissonFamily(GammaHyper prior) : prior_(prior) {
  require(prior.shape > 0.0 && prior.rate > 0.0, "poisson family: invalid prior");
}

double PoissonFamily::log_density(double x, std::span<const double> param) const {
  return poisson_logpmf(static_cast<std::int64_t>(std::llround(x)), param[0]);
}

std::vector<double> PoissonFamily::sample_posterior(std::span<const double> data, Rng& rng) const {
  std::uint64_t s = 0;
  for (double x : data) s += static_cast<std::uint64_t>(std::llround(x));
  const GammaHyper post = conj_update_gamma_poisson(prior_, s, data.size());
  return {std::max(gamma_sample(rng, post.shape, post.rate), std::numeric_limits<double>::min())};
}

NegBinFamily::NegBinFamily(BetaHyper prior, int r, NegBinForm form) : prior_(prior), r_(r), form_(form) {
  require(prior.a > 0.0 && prior.b > 0.0 && r >= 1, "negbin family: invalid prior");
}

double NegBinFamily::log_density(double x, std::span<const double> param) const {
  return negbin_logpmf(static_cast<std::int64_t>(std::llround(x)), r_, param[0], form_);
}

std::vector<double> NegBinFamily::sample_posterior(std::span<const double> data, Rng& rng) const {
  std::uint64_t s = 0;
  for (double x : data) s += static_cast<std::uint64_t>(std::llround(x));
  const BetaHyper post = conj_update_beta_negbin(prior_, s, data.size(), r_);
  return {hsmm::clamp_open_unit(beta_sample(rng, post.a, post.b))};
}

std::vector<MixtureDraw> mixture_gibbs(std::span<const double> obs, std::span<const double> weights_prior,
                                       std::span<const ConjugateFamily* const> components, std::size_t sweeps,
                                       Rng& rng) {
  const std::size_t M = components.size();
  require(M > 0, "mixture: need at least one component");
  require(weights_prior.size() == M, "mixture: weight prior dimension mismatch");
  const std::size_t n = obs.size();
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng.below(M));

  std::vector<MixtureDraw> out;
  out.reserve(sweeps);
  std::vector<std::vector<double>> groups(M);
  std::vector<std::uint64_t> counts(M);
  std::vector<double> lw(M);
  for (std::size_t it = 0; it < sweeps; ++it) {
    MixtureDraw draw;
    for (auto& g : groups) g.clear();
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      groups[labels[i]].push_back(obs[i]);
      ++counts[labels[i]];
    }
    draw.params.resize(M);
    for (std::size_t m = 0; m < M; ++m) draw.params[m] = components[m]->sample_posterior(groups[m], rng);
    draw.weights = dirichlet_sample(rng, conj_update_dirichlet(weights_prior, counts));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < M; ++m)
        lw[m] = draw.weights[m] > 0.0
                    ? std::log(draw.weights[m]) + components[m]->log_density(obs[i], draw.params[m])
                    : -std::numeric_limits<double>::infinity();
      labels[i] = static_cast<int>(categorical_from_log(rng, lw));
    }
    draw.labels = labels;
    out.push_back(std::move(draw));
  }
  return out;
}

}  // namespace flexload
