#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flexload/conjugate.hpp"
#include "flexload/duration.hpp"
#include "flexload/numerics.hpp"
#include "flexload/rng.hpp"
#include "flexload/simplex.hpp"

namespace flexload::hsmm {

// What the message passing needs. pi has an exactly zero diagonal; with a
// single state its only row is zero.
struct HsmmModel {
  Table pi;
  std::vector<double> theta;
  double sigma2 = 1.0;
  std::vector<DurationPmf> durations;
  SimplexVector initial;  // uniform when empty

  std::size_t num_states() const { return theta.size(); }
  double initial_prob(std::size_t j) const;
  void validate() const;
};

struct HsmmParams {
  Table pi;
  std::vector<double> theta;
  double sigma2 = 1.0;
  std::vector<DurationParams> durations;
  NegBinForm form = NegBinForm::Verbatim;
  SimplexVector initial;

  std::size_t num_states() const { return theta.size(); }
  HsmmModel model() const;
};

struct HsmmPriors {
  std::vector<double> alpha;  // Dirichlet weights; the own-state entry is ignored
  std::vector<NormalPrior> emission;
  std::vector<DurationHyper> duration;
};

struct SegmentPath {
  std::vector<int> z;
  std::vector<std::int64_t> D;
  std::size_t T = 0;

  // State sequence of length T; the last segment is cut at T.
  std::vector<int> expand() const;
  // Checks the censoring constraint and the absence of self-transitions.
  bool valid() const;
  // Durations of the segments in state j (the final one uncensored as drawn).
  std::vector<std::int64_t> durations_of(int j) const;
};

struct HsmmSimulation {
  SegmentPath path;
  std::vector<double> y;
};

HsmmSimulation simulate_hsmm(const HsmmModel& model, std::size_t T, Rng& rng);

struct HsmmMessages {
  Table B;         // (T+1) x J, B(t, i) = log p(y_{t+1:T} | x_t = i, boundary at t)
  Table Bstar;     // T x J, Bstar(t, i) = log p(y_{t+1:T} | new segment in i starts at t+1)
  Table cum;       // (T+1) x J prefix sums of emission log-likelihoods
  Table log_pmf;   // J x W
  Table log_tail;  // J x (W+1)
  std::int64_t window = 0;
  double truncation_error = 0.0;

  std::size_t length() const { return Bstar.rows(); }
  double seg_loglik(std::size_t from, std::size_t to, std::size_t j) const { return cum(to, j) - cum(from, j); }
};

// max_duration limits segment lengths to a window; the omitted tail mass is
// reported in truncation_error.
HsmmMessages hsmm_backward_messages(const HsmmModel& model, std::span<const double> y,
                                    std::optional<std::int64_t> max_duration = std::nullopt);

// F(t, j) = log p(y_{1:t}, segment in j ends at t); Fstar(t, j) = log p(y_{1:t}, segment in j starts at t+1).
struct HsmmForward {
  Table F;
  Table Fstar;
};
HsmmForward hsmm_forward_messages(const HsmmModel& model, const HsmmMessages& msgs);

double hsmm_log_likelihood(const HsmmModel& model, const HsmmMessages& msgs);
std::vector<SimplexVector> hsmm_state_marginals(const HsmmModel& model, std::span<const double> y,
                                                std::optional<std::int64_t> max_duration = std::nullopt);

SegmentPath blocked_sample_segments(const HsmmModel& model, const HsmmMessages& msgs, Rng& rng);
SegmentPath blocked_sample_segments(const HsmmModel& model, std::span<const double> y, Rng& rng,
                                    std::optional<std::int64_t> max_duration = std::nullopt);

// One mixture-Gibbs pass for a single state: labels, then lambda, varphi, phi.
DurationParams sample_duration_params(std::span<const std::int64_t> durations, const DurationHyper& hyper,
                                      const DurationParams& current, NegBinForm form, Rng& rng);

struct HsmmState {
  SegmentPath path;
  HsmmParams params;
};

// Segments, then theta, then off-diagonal transitions, then duration parameters.
void gibbs_sweep_hsmm(HsmmState& state, const HsmmPriors& priors, std::span<const double> y, Rng& rng,
                      std::optional<std::int64_t> max_duration = std::nullopt);

double clamp_open_unit(double x);

}  // namespace flexload::hsmm
