#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "flexload/conjugate.hpp"
#include "flexload/distributions.hpp"
#include "flexload/rng.hpp"

namespace flexload {

// Poisson / negative-binomial mixture for segment lengths.
struct DurationParams {
  double phi = 0.5;     // Poisson weight
  double lambda = 1.0;  // Poisson rate
  int r = 1;            // negative-binomial count, fixed
  double varphi = 0.5;  // negative-binomial probability
};

struct DurationHyper {
  BetaHyper phi;
  GammaHyper lambda;
  BetaHyper varphi;
  int r = 1;

  void validate() const;
};

// Raw mixture formula phi Pois(d) + (1-phi) NB(d), defined for d >= 0.
double duration_logpmf(std::int64_t d, const DurationParams& w, NegBinForm form = NegBinForm::Verbatim);

void validate(const DurationParams& w);

// Positive-support duration law. Built from mixture parameters (conditioned on
// D >= 1), from an explicit table, or as a geometric law.
class DurationPmf {
 public:
  static DurationPmf from_params(const DurationParams& w, NegBinForm form = NegBinForm::Verbatim);
  // table[d-1] = P(D = d); normalized on construction.
  static DurationPmf from_table(std::vector<double> table);
  // P(D = d) = stay^(d-1) (1 - stay).
  static DurationPmf geometric(double stay);

  double log_pmf(std::int64_t d) const;
  double pmf(std::int64_t d) const { return std::exp(log_pmf(d)); }

  // log P(D = d) for d = 1..n into log_pmf[d-1]; log P(D > d) for d = 0..n
  // into log_tail[d]. Tails use compensated 1 - cumulative sums.
  void tabulate(std::int64_t n, std::vector<double>& log_pmf, std::vector<double>& log_tail) const;

  std::int64_t sample(Rng& rng) const { return sample_greater(rng, 0); }
  // Draw from D | D > n.
  std::int64_t sample_greater(Rng& rng, std::int64_t n) const;

  double mean() const;
  std::optional<std::int64_t> max_support() const;

 private:
  enum class Kind { Mixture, Table, Geometric };
  Kind kind_ = Kind::Table;
  DurationParams w_{};
  NegBinForm form_ = NegBinForm::Verbatim;
  double log_norm_ = 0.0;
  double stay_ = 0.0;
  std::vector<double> table_;
};

}  // namespace flexload
