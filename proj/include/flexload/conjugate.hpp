#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flexload/rng.hpp"
#include "flexload/simplex.hpp"

namespace flexload {

struct NormalPrior {
  double mean = 0.0;
  double var = 1.0;
};

struct GammaHyper {
  double shape = 1.0;
  double rate = 1.0;
};

struct BetaHyper {
  double a = 1.0;
  double b = 1.0;
};

NormalPrior conj_update_normal(const NormalPrior& prior, double obs_sum, std::uint64_t obs_count, double sigma2);
std::vector<double> conj_update_dirichlet(std::span<const double> alpha, std::span<const std::uint64_t> counts);
GammaHyper conj_update_gamma_poisson(const GammaHyper& hyper, std::uint64_t data_sum, std::uint64_t data_n);
BetaHyper conj_update_beta_negbin(const BetaHyper& hyper, std::uint64_t data_sum, std::uint64_t data_n, int r);

SimplexVector dirichlet_mean(std::span<const double> alpha);

// Truncated GEM(gamma) weights; residual mass goes to the final atom.
SimplexVector stick_breaking(double gamma, double epsilon, Rng& rng);
inline SimplexVector stick_breaking(double gamma, Rng& rng) { return stick_breaking(gamma, 1e-6, rng); }

// Seating probabilities for existing tables followed by a new table.
SimplexVector crp_predictive(std::span<const std::uint64_t> table_counts, double gamma);

}  // namespace flexload
