#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "flexload/conjugate.hpp"
#include "flexload/errors.hpp"
#include "flexload/hmm.hpp"
#include "flexload/numerics.hpp"
#include "flexload/rng.hpp"
#include "flexload/simplex.hpp"

namespace flexload::smc {

// Throws DegeneracyError when every weight is zero or a weight is NaN.
SimplexVector normalize_log_weights(std::span<const double> logw);

// Offspring counts, summing to N. One uniform is consumed.
std::vector<std::size_t> systematic_resample(const SimplexVector& weights, Rng& rng);
std::vector<std::size_t> offspring_to_ancestors(std::span<const std::size_t> counts);
double effective_sample_size(const SimplexVector& weights);

struct FilterOptions {
  // Resample only when ESS < N/2. Off means resample every step.
  bool ess_resampling = false;
  std::size_t workers = 1;
};

template <class State>
struct Ensemble {
  std::vector<State> particles;
  SimplexVector weights;
  std::size_t n = 0;

  std::size_t size() const { return particles.size(); }
};

template <class State>
Ensemble<State> make_ensemble(std::vector<State> particles) {
  require(!particles.empty(), "ensemble: no particles");
  Ensemble<State> e;
  e.weights = SimplexVector::uniform(particles.size());
  e.particles = std::move(particles);
  return e;
}

// Proposal q(x_n | x_{n-1}, y_n) and log incremental weight
// log[ p(y_n|x_n) p(x_n|x_{n-1}) / q(x_n|x_{n-1}, y_n) ].
template <class State>
struct SisHooks {
  std::function<State(const State& prev, double y, Rng& rng)> propose;
  std::function<double(const State& prev, const State& next, double y)> log_incremental;
};

// log p(y_n | x_{n-1}) and a draw from p(x_n | x_{n-1}, y_n).
template <class State>
struct ApfHooks {
  std::function<double(const State& prev, double y)> log_predictive;
  std::function<State(const State& prev, double y, Rng& rng)> propose;
};

template <class State>
void resample_ensemble(Ensemble<State>& e, Rng& rng) {
  const auto anc = offspring_to_ancestors(systematic_resample(e.weights, rng));
  std::vector<State> next;
  next.reserve(anc.size());
  for (std::size_t a : anc) next.push_back(e.particles[a]);
  e.particles = std::move(next);
  e.weights = SimplexVector::uniform(e.particles.size());
}

template <class State>
void sis_step(Ensemble<State>& e, const SisHooks<State>& hooks, double y, Rng& rng,
              const FilterOptions& opt = {}) {
  const std::size_t N = e.size();
  const std::uint64_t key = rng();
  std::vector<double> logw(N);
  std::vector<State> next(N);
  parallel_for(N, opt.workers, [&](std::size_t i) {
    Rng prng = Rng::derive(key, {i});
    next[i] = hooks.propose(e.particles[i], y, prng);
    logw[i] = std::log(e.weights[i]) + hooks.log_incremental(e.particles[i], next[i], y);
  });
  e.weights = normalize_log_weights(logw);
  e.particles = std::move(next);
  ++e.n;
}

template <class State>
void sir_step(Ensemble<State>& e, const SisHooks<State>& hooks, double y, Rng& rng,
              const FilterOptions& opt = {}) {
  sis_step(e, hooks, y, rng, opt);
  if (!opt.ess_resampling || effective_sample_size(e.weights) < 0.5 * static_cast<double>(e.size()))
    resample_ensemble(e, rng);
}

template <class State>
void apf_step(Ensemble<State>& e, const ApfHooks<State>& hooks, double y, Rng& rng,
              const FilterOptions& opt = {}) {
  const std::size_t N = e.size();
  std::vector<double> logw(N);
  parallel_for(N, opt.workers,
               [&](std::size_t i) { logw[i] = std::log(e.weights[i]) + hooks.log_predictive(e.particles[i], y); });
  e.weights = normalize_log_weights(logw);
  if (!opt.ess_resampling || effective_sample_size(e.weights) < 0.5 * static_cast<double>(N))
    resample_ensemble(e, rng);
  const std::uint64_t key = rng();
  std::vector<State> next(N);
  parallel_for(N, opt.workers, [&](std::size_t i) {
    Rng prng = Rng::derive(key, {i});
    next[i] = hooks.propose(e.particles[i], y, prng);
  });
  e.particles = std::move(next);
  ++e.n;
}

struct OptimalProposal {
  SimplexVector proposal;
  double log_predictive = 0.0;
};

// x_prev < 0 means no previous state; the initial distribution replaces the
// transition row.
OptimalProposal optimal_proposal_hmm(int x_prev, const hmm::HmmParams& zeta, double y);

// Known-parameter APF with the optimal proposal; returns the particle
// estimate of p(x_t | y_{1:t}) for every t.
std::vector<SimplexVector> apf_filter_hmm(const hmm::HmmParams& params, std::span<const double> y, std::size_t N,
                                          Rng& rng, const FilterOptions& opt = {});

struct SufficientStats {
  std::size_t J = 0;
  std::vector<std::uint64_t> trans;  // J x J, row-major
  std::vector<double> emis_sums;
  std::vector<std::uint64_t> emis_counts;
  std::uint64_t steps = 0;

  SufficientStats() = default;
  explicit SufficientStats(std::size_t num_states);

  std::uint64_t n(std::size_t j, std::size_t l) const { return trans[j * J + l]; }
  std::uint64_t total_transitions() const;
  std::vector<std::vector<std::uint64_t>> trans_matrix() const;
};

// Per-chain Bayesian HMM prior. sigma2 is the known emission variance.
struct ChainPrior {
  std::vector<double> alpha;
  std::vector<NormalPrior> emission;
  double sigma2 = 1.0;

  std::size_t num_states() const { return emission.size(); }
  void validate() const;
};

// x_prev < 0 on the first observation; only the emission statistic moves.
void pl_update_stats(SufficientStats& r, int x_prev, int x_new, double y);

// Rows of pi first, then theta, in state order.
hmm::HmmParams pl_sample_params(const SufficientStats& r, const ChainPrior& prior, Rng& rng);

struct PlParticle {
  int x = -1;
  SufficientStats r;
  hmm::HmmParams zeta;
};

// Draws zeta_0 from the prior for every particle.
Ensemble<PlParticle> bpf_init(std::size_t N, const ChainPrior& prior, Rng& rng);
void bpf_step(Ensemble<PlParticle>& e, double y, const ChainPrior& prior, Rng& rng, const FilterOptions& opt = {});

inline constexpr std::size_t kDefaultJointCap = 1024;

// Joint states are mixed-radix with chain 0 varying fastest.
std::size_t joint_state_count(std::span<const std::size_t> states_per_chain, std::size_t cap = kDefaultJointCap);
std::vector<int> decode_joint_state(std::size_t s, std::span<const std::size_t> states_per_chain);

struct FactorialProposal {
  std::vector<double> probs;
  double log_predictive = 0.0;
};

FactorialProposal factorial_state_proposal(std::span<const int> x_prev, std::span<const hmm::HmmParams> zeta,
                                           std::span<const double> sigma2, double ybar,
                                           std::size_t cap = kDefaultJointCap);

struct ConditionalNormal {
  std::vector<double> mean;
  Table cov;
};

// Law of the per-chain emissions given their sum ybar.
ConditionalNormal conditional_emission_moments(std::span<const double> means, std::span<const double> vars,
                                               double ybar);
// Writes K values summing to ybar. K = 1 consumes no randomness.
void conditional_emission_sample(std::span<const double> means, std::span<const double> vars, double ybar,
                                 Rng& rng, std::span<double> out);
std::vector<double> conditional_emission_sample(std::span<const double> means, std::span<const double> vars,
                                                double ybar, Rng& rng);

// Weighted vote; ties go to the lowest state.
std::vector<double> vote_fractions(std::span<const int> states, std::span<const double> weights, std::size_t J);
int map_vote(std::span<const int> states, std::span<const double> weights, std::size_t J);

struct FactorialConfig {
  std::vector<ChainPrior> chains;
  std::size_t particles = 1000;
  std::size_t joint_cap = kDefaultJointCap;
  FilterOptions options;
};

struct ChainEstimate {
  int map_state = 0;
  std::vector<double> vote;        // weighted state frequencies
  std::vector<double> theta_mean;  // posterior-mean power per state
  double power_mean = 0.0;         // posterior-mean emission at this step
};

// Factorial Bayesian particle filter with flat per-particle storage.
class FactorialFilter {
 public:
  FactorialFilter(FactorialConfig config, Rng& rng);

  void step(double ybar, Rng& rng);

  std::size_t time() const { return n_; }
  std::size_t num_particles() const { return N_; }
  std::size_t num_chains() const { return K_; }
  std::size_t num_states(std::size_t k) const { return J_[k]; }
  std::size_t joint_states() const { return M_; }
  const SimplexVector& weights() const { return weights_; }
  const FactorialConfig& config() const { return cfg_; }

  int state(std::size_t i, std::size_t k) const { return x_[i * K_ + k]; }
  double emission(std::size_t i, std::size_t k) const { return y_[i * K_ + k]; }
  double theta(std::size_t i, std::size_t k, std::size_t j) const;
  double pi(std::size_t i, std::size_t k, std::size_t j, std::size_t l) const;
  SufficientStats stats(std::size_t i, std::size_t k) const;
  hmm::HmmParams params(std::size_t i, std::size_t k) const;

  std::vector<ChainEstimate> estimate() const;

 private:
  // Block offsets within a particle, per chain.
  struct Layout {
    std::size_t trans, sums, counts, pi, theta;
  };

  const double* block(std::size_t i) const { return store_.data() + i * stride_; }
  double* block(std::size_t i) { return store_.data() + i * stride_; }
  void sample_params(double* blk, Rng& rng) const;
  double joint_terms(std::size_t i, double ybar, double* out) const;

  FactorialConfig cfg_;
  std::size_t N_ = 0, K_ = 0, M_ = 0, stride_ = 0, n_ = 0;
  std::vector<std::size_t> J_;
  std::vector<Layout> layout_;
  double total_var_ = 0.0;
  std::vector<int> x_, x_next_;
  std::vector<double> y_, y_next_;
  std::vector<double> store_, store_next_;
  std::vector<double> log_terms_, log_pred_;
  SimplexVector weights_;
};

}  // namespace flexload::smc
