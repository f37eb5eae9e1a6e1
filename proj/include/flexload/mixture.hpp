#pragma once

#include <memory>
#include <span>
#include <vector>

#include "flexload/conjugate.hpp"
#include "flexload/distributions.hpp"
#include "flexload/rng.hpp"
#include "flexload/simplex.hpp"

namespace flexload {

// A likelihood family with a conjugate prior on its parameter vector.
class ConjugateFamily {
 public:
  virtual ~ConjugateFamily() = default;
  virtual double log_density(double x, std::span<const double> param) const = 0;
  // Posterior draw given the data assigned to the component; a prior draw when empty.
  virtual std::vector<double> sample_posterior(std::span<const double> data, Rng& rng) const = 0;
};

// Normal with known variance; parameter is the mean.
class NormalMeanFamily : public ConjugateFamily {
 public:
  NormalMeanFamily(NormalPrior prior, double sigma2);
  double log_density(double x, std::span<const double> param) const override;
  std::vector<double> sample_posterior(std::span<const double> data, Rng& rng) const override;

 private:
  NormalPrior prior_;
  double sigma2_;
};

// Poisson with a Gamma prior on the rate.
class PoissonFamily : public ConjugateFamily {
 public:
  explicit PoissonFamily(GammaHyper prior);
  double log_density(double x, std::span<const double> param) const override;
  std::vector<double> sample_posterior(std::span<const double> data, Rng& rng) const override;

 private:
  GammaHyper prior_;
};

// Negative binomial with fixed r and a Beta prior on the probability.
class NegBinFamily : public ConjugateFamily {
 public:
  NegBinFamily(BetaHyper prior, int r, NegBinForm form = NegBinForm::Verbatim);
  double log_density(double x, std::span<const double> param) const override;
  std::vector<double> sample_posterior(std::span<const double> data, Rng& rng) const override;

 private:
  BetaHyper prior_;
  int r_;
  NegBinForm form_;
};

struct MixtureDraw {
  SimplexVector weights;
  std::vector<std::vector<double>> params;
  std::vector<int> labels;
};

// Each sweep: component parameters given labels, weights given labels, then labels.
// Initial labels are uniform at random.
std::vector<MixtureDraw> mixture_gibbs(std::span<const double> obs, std::span<const double> weights_prior,
                                       std::span<const ConjugateFamily* const> components, std::size_t sweeps,
                                       Rng& rng);

}  // namespace flexload
