#include "flexload/conjugate.hpp"

#include <cmath>

#include "flexload/distributions.hpp"
#include "flexload/errors.hpp"

namespace flexload {

NormalPrior conj_update_normal(const NormalPrior& prior, double obs_sum, std::uint64_t obs_count, double sigma2) {
  require(prior.var > 0.0, "normal prior: variance must be positive");
  require(sigma2 > 0.0, "normal update: sigma2 must be positive");
  if (obs_count == 0) return prior;
  const double n = static_cast<double>(obs_count);
  const double var = 1.0 / (1.0 / prior.var + n / sigma2);
  const double mean = (prior.mean / prior.var + obs_sum / sigma2) * var;
  return {mean, var};
}

std::vector<double> conj_update_dirichlet(std::span<const double> alpha, std::span<const std::uint64_t> counts) {
  require(alpha.size() == counts.size(), "dirichlet update: dimension mismatch");
  std::vector<double> out(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    require(alpha[i] >= 0.0, "dirichlet update: negative parameter");
    out[i] = alpha[i] + static_cast<double>(counts[i]);
  }
  return out;
}

GammaHyper conj_update_gamma_poisson(const GammaHyper& hyper, std::uint64_t data_sum, std::uint64_t data_n) {
  require(hyper.shape > 0.0 && hyper.rate > 0.0, "gamma hyper: parameters must be positive");
  return {hyper.shape + static_cast<double>(data_sum), hyper.rate + static_cast<double>(data_n)};
}

BetaHyper conj_update_beta_negbin(const BetaHyper& hyper, std::uint64_t data_sum, std::uint64_t data_n, int r) {
  require(hyper.a > 0.0 && hyper.b > 0.0, "beta hyper: parameters must be positive");
  require(r >= 1, "beta update: r must be >= 1");
  return {hyper.a + static_cast<double>(data_sum), hyper.b + static_cast<double>(r) * static_cast<double>(data_n)};
}

SimplexVector dirichlet_mean(std::span<const double> alpha) {
  require(alpha.size() >= 2, "dirichlet mean: need at least two entries");
  return SimplexVector::normalize(alpha);
}

SimplexVector stick_breaking(double gamma, double epsilon, Rng& rng) {
  require(gamma > 0.0, "stick breaking: gamma must be positive");
  require(epsilon > 0.0 && epsilon < 1.0, "stick breaking: epsilon must lie in (0,1)");
  std::vector<double> w;
  double residual = 1.0;
  while (residual >= epsilon) {
    const double b = beta_sample(rng, 1.0, gamma);
    w.push_back(b * residual);
    residual *= 1.0 - b;
  }
  w.back() += residual;
  return SimplexVector::normalize(w);
}

SimplexVector crp_predictive(std::span<const std::uint64_t> table_counts, double gamma) {
  require(gamma > 0.0, "crp: gamma must be positive");
  std::vector<double> w;
  w.reserve(table_counts.size() + 1);
  for (auto c : table_counts) w.push_back(static_cast<double>(c));
  w.push_back(gamma);
  return SimplexVector::normalize(w);
}

}  // namespace flexload
