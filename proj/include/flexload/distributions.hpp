#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flexload/rng.hpp"
#include "flexload/simplex.hpp"

namespace flexload {

enum class NegBinForm {
  // C(d+r-1, r-1) p^(d-1) (1-p)^r on d >= 1. Not a normalized law; see DurationPmf.
  Verbatim,
  // C(d+r-1, r-1) p^d (1-p)^r on d >= 0.
  Standard,
};

double normal_logpdf(double x, double mean, double var);
double poisson_logpmf(std::int64_t k, double lambda);
double negbin_logpmf(std::int64_t d, int r, double p, NegBinForm form = NegBinForm::Verbatim);
double beta_logpdf(double x, double a, double b);
double gamma_logpdf(double x, double shape, double rate);
// log sum_i w_i exp(component_logpdf_i)
double mixture_logpdf(std::span<const double> weights, std::span<const double> component_logpdf);

double standard_normal(Rng& rng);
double normal_sample(Rng& rng, double mean, double var);
double gamma_sample(Rng& rng, double shape, double rate);
// log of a Gamma(shape, 1) draw; stays finite for tiny shapes.
double log_gamma_sample(Rng& rng, double shape);
double beta_sample(Rng& rng, double a, double b);
// Zero entries of alpha yield exactly zero coordinates.
SimplexVector dirichlet_sample(Rng& rng, std::span<const double> alpha);
// Same draw as dirichlet_sample, written into out.
void dirichlet_sample_into(Rng& rng, std::span<const double> alpha, std::span<double> out);
// Failures before the first success, success probability q in (0, 1].
std::int64_t geometric_sample(Rng& rng, double q);
std::int64_t poisson_sample(Rng& rng, double lambda);
// Standard-form negative binomial count.
std::int64_t negbin_sample(Rng& rng, int r, double p);
bool bernoulli_sample(Rng& rng, double p);
std::size_t categorical_sample(Rng& rng, std::span<const double> weights);
std::size_t categorical_sample(Rng& rng, const SimplexVector& w);
std::size_t categorical_from_log(Rng& rng, std::span<const double> logw);

}  // namespace flexload
