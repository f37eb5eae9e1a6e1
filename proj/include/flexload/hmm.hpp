#pragma once

#include <span>
#include <vector>

#include "flexload/conjugate.hpp"
#include "flexload/numerics.hpp"
#include "flexload/rng.hpp"
#include "flexload/simplex.hpp"

namespace flexload::hmm {

// States are 0-based.
struct HmmParams {
  std::vector<SimplexVector> pi;
  std::vector<double> theta;
  double sigma2 = 1.0;
  SimplexVector initial;  // uniform when left empty

  std::size_t num_states() const { return theta.size(); }
  double initial_prob(std::size_t j) const;
  void validate() const;
};

struct HmmPriors {
  std::vector<double> alpha;  // Dirichlet prior on every row of pi
  std::vector<NormalPrior> emission;
};

struct HmmState {
  std::vector<int> x;
  HmmParams params;
};

struct HmmSimulation {
  std::vector<int> x;
  std::vector<double> y;
};

HmmSimulation simulate_hmm(const HmmParams& params, std::size_t T, Rng& rng);

// Rows index time, columns index state. Entry (t, x) = log p(y_t | x).
Table emission_loglik(const HmmParams& params, std::span<const double> y);

// f(t, x) = log p(y_{1:t}, x_t = x).
Table forward_messages(const HmmParams& params, std::span<const double> y);
// b(t, x) = log p(y_{t+1:T} | x_t = x); last row is zero.
Table backward_messages(const HmmParams& params, std::span<const double> y);

double log_likelihood(const Table& forward);

std::vector<SimplexVector> smoothing_marginals(const Table& forward, const Table& backward);
// p(x_t | y_{1:t}).
std::vector<SimplexVector> filtering_marginals(const Table& forward);

std::vector<int> blocked_sample_states(const HmmParams& params, std::span<const double> y, const Table& backward,
                                       Rng& rng);
std::vector<int> blocked_sample_states(const HmmParams& params, std::span<const double> y, Rng& rng);

// Transition counts n(j, k) of a state path.
std::vector<std::vector<std::uint64_t>> transition_counts(std::span<const int> x, std::size_t J);

void gibbs_sweep_hmm(HmmState& state, const HmmPriors& priors, std::span<const double> y, Rng& rng);

}  // namespace flexload::hmm
