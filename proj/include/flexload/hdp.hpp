#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flexload/conjugate.hpp"
#include "flexload/duration.hpp"
#include "flexload/hsmm.hpp"
#include "flexload/rng.hpp"
#include "flexload/simplex.hpp"

namespace flexload::hdp {

using CountMatrix = std::vector<std::vector<std::uint64_t>>;

// Weak-limit approximation of an HDP transition prior with L super-states.
struct WeakLimitHdp {
  std::size_t L = 0;
  double gamma = 1.0;
  double alpha = 1.0;
  SimplexVector beta;
  std::vector<SimplexVector> pi;
  CountMatrix n;    // n[j][k]; n[j][j] = sum of rho[j]
  CountMatrix rho;  // rho[j] has one entry per transition out of j
  CountMatrix m;    // m[k][j] = tables in restaurant k serving dish j

  void validate() const;
};

// Prior draw: beta ~ Dir(gamma/L), pi_j ~ Dir(alpha beta).
WeakLimitHdp make_weak_limit_hdp(std::size_t L, double gamma, double alpha, Rng& rng);

boost::multiprecision::cpp_int stirling_unsigned(unsigned n, unsigned m);

// Number of occupied tables for n customers with concentration `weight`.
std::uint64_t sample_m(std::uint64_t n, double weight, Rng& rng);
std::vector<std::uint64_t> sample_rho(double pi_jj, std::uint64_t count, Rng& rng);
SimplexVector sample_beta_posterior(const CountMatrix& m, double gamma, std::size_t L, Rng& rng);
SimplexVector sample_pi_posterior(const SimplexVector& beta, double alpha, std::span<const std::uint64_t> n_row,
                                  Rng& rng);

// One pass in the order rho, m, beta, pi. `transitions[j][k]` counts
// super-state changes j -> k; the diagonal is ignored.
void hdp_sweep(WeakLimitHdp& hdp, const CountMatrix& transitions, Rng& rng);

// pi_{j,-j} / (1 - pi_jj) as a transition table with zero diagonal.
Table normalized_offdiag(const std::vector<SimplexVector>& pi);

CountMatrix superstate_transitions(std::span<const int> z, std::size_t L);

struct EmissionMixturePrior {
  SimplexVector weights;
  std::vector<NormalPrior> components;
  SimplexVector duration_weights;
  std::vector<DurationHyper> duration_components;

  void validate() const;
};

struct HdpHsmmConfig {
  std::size_t L = 10;
  double gamma = 1.0;
  double alpha = 1.0;
  double sigma2 = 1.0;
  NegBinForm form = NegBinForm::Verbatim;
  std::optional<std::int64_t> max_duration;
  EmissionMixturePrior prior;
};

struct HdpHsmmState {
  WeakLimitHdp hdp;
  std::vector<double> theta;
  std::vector<DurationParams> durations;
  std::vector<int> emission_labels;  // mixture component behind each theta_j
  std::vector<int> duration_labels;  // mixture component behind each w_j
  hsmm::SegmentPath path;
  double truncation_error = 0.0;

  hsmm::HsmmModel model(const HdpHsmmConfig& cfg) const;
  // Super-states with at least one segment.
  std::size_t utilized_states() const;
};

HdpHsmmState init_hdphsmm(const HdpHsmmConfig& cfg, std::size_t T, Rng& rng);

// Segments, then the HDP pass, then theta, then duration parameters.
void gibbs_sweep_hdphsmm(HdpHsmmState& state, const HdpHsmmConfig& cfg, std::span<const double> y, Rng& rng);

}  // namespace flexload::hdp
