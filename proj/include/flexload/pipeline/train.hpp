#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flexload/pipeline/bundle.hpp"
#include "flexload/pipeline/config.hpp"
#include "flexload/pipeline/trace.hpp"

namespace flexload::pipeline {

// Maximum-likelihood fit of phi Pois(lambda) + (1 - phi) NB(r, varphi) on the
// counts (standard negative binomial on d >= 0, r fixed).
struct DurationFit {
  DurationParams params;
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
};
DurationFit fit_duration_mixture(std::span<const std::int64_t> durations, int r, std::size_t max_iterations = 500);

// Noise variance from first differences: (MAD / 0.6745)^2 / 2, floored at `floor`.
double robust_noise_variance(std::span<const double> y, double floor = 1.0);

// One-dimensional weighted k-means with quantile seeding; returns sorted centers.
std::vector<double> kmeans_1d(std::span<const double> x, std::span<const double> w, std::size_t k,
                              std::size_t iterations = 100);

struct TrainResult {
  HyperParamBundle bundle;
  std::vector<std::string> warnings;
};

// Per device and house: HDP-HSMM Gibbs labelling of the device column, mode
// clustering of the labelled states into J components, moment matching for
// the emission components, EM on the run lengths of each mode for the
// duration hyperparameters, and transition frequencies for alpha.
TrainResult train_hyperparams(const std::vector<Dataset>& corpus, const RunConfig& cfg, Rng& rng);

}  // namespace flexload::pipeline
