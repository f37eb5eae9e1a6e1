#include "flexload/distributions.hpp"

#include <cmath>
#include <numbers>

#include "flexload/errors.hpp"
#include "flexload/numerics.hpp"

namespace flexload {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

double normal_logpdf(double x, double mean, double var) {
  require(var > 0.0, "normal: variance must be positive");
  const double z = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + z * z / var);
}

double poisson_logpmf(std::int64_t k, double lambda) {
  require(lambda >= 0.0, "poisson: negative rate");
  if (k < 0) return kNegInf;
  if (lambda == 0.0) return k == 0 ? 0.0 : kNegInf;
  const double kd = static_cast<double>(k);
  return kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0);
}

double negbin_logpmf(std::int64_t d, int r, double p, NegBinForm form) {
  require(r >= 1, "negbin: r must be >= 1");
  require(p > 0.0 && p < 1.0, "negbin: p must lie in (0,1)");
  const double dd = static_cast<double>(d);
  const double rr = static_cast<double>(r);
  const std::int64_t lo = form == NegBinForm::Verbatim ? 1 : 0;
  if (d < lo) return kNegInf;
  const double log_choose = std::lgamma(dd + rr) - std::lgamma(rr) - std::lgamma(dd + 1.0);
  const double power = form == NegBinForm::Verbatim ? dd - 1.0 : dd;
  return log_choose + power * std::log(p) + rr * std::log1p(-p);
}

double beta_logpdf(double x, double a, double b) {
  require(a > 0.0 && b > 0.0, "beta: parameters must be positive");
  if (x <= 0.0 || x >= 1.0) return kNegInf;
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) + std::lgamma(a + b) - std::lgamma(a) -
         std::lgamma(b);
}

double gamma_logpdf(double x, double shape, double rate) {
  require(shape > 0.0 && rate > 0.0, "gamma: parameters must be positive");
  if (x <= 0.0) return kNegInf;
  return shape * std::log(rate) + (shape - 1.0) * std::log(x) - rate * x - std::lgamma(shape);
}

double mixture_logpdf(std::span<const double> weights, std::span<const double> component_logpdf) {
  require(weights.size() == component_logpdf.size(), "mixture: size mismatch");
  double acc = kNegInf;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    require(weights[i] >= 0.0, "mixture: negative weight");
    if (weights[i] == 0.0) continue;
    acc = log_add(acc, std::log(weights[i]) + component_logpdf[i]);
  }
  return acc;
}

double standard_normal(Rng& rng) {
  // Marsaglia polar method, one value per call for stream simplicity.
  for (;;) {
    const double u = 2.0 * rng.uniform() - 1.0;
    const double v = 2.0 * rng.uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

double normal_sample(Rng& rng, double mean, double var) {
  require(var >= 0.0, "normal: negative variance");
  return mean + std::sqrt(var) * standard_normal(rng);
}

namespace {
// Marsaglia-Tsang for shape >= 1.
double gamma_mt(Rng& rng, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}
}  // namespace

double log_gamma_sample(Rng& rng, double shape) {
  require(shape > 0.0, "gamma: shape must be positive");
  if (shape >= 1.0) return std::log(gamma_mt(rng, shape));
  const double g = gamma_mt(rng, shape + 1.0);
  return std::log(g) + std::log(rng.uniform_open()) / shape;
}

double gamma_sample(Rng& rng, double shape, double rate) {
  require(shape > 0.0 && rate > 0.0, "gamma: parameters must be positive");
  if (shape >= 1.0) return gamma_mt(rng, shape) / rate;
  return std::exp(log_gamma_sample(rng, shape)) / rate;
}

double beta_sample(Rng& rng, double a, double b) {
  require(a > 0.0 && b > 0.0, "beta: parameters must be positive");
  const double la = log_gamma_sample(rng, a);
  const double lb = log_gamma_sample(rng, b);
  // a/(a+b) computed as a logistic of the log ratio.
  const double diff = lb - la;
  if (diff > 0) {
    const double e = std::exp(-diff);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(diff));
}

SimplexVector dirichlet_sample(Rng& rng, std::span<const double> alpha) {
  std::vector<double> w(alpha.size());
  dirichlet_sample_into(rng, alpha, w);
  return SimplexVector(std::move(w));
}

void dirichlet_sample_into(Rng& rng, std::span<const double> alpha, std::span<double> out) {
  require(!alpha.empty() && out.size() == alpha.size(), "dirichlet: empty parameter");
  bool any = false;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    require(alpha[i] >= 0.0 && std::isfinite(alpha[i]), "dirichlet: negative parameter");
    out[i] = kNegInf;
    if (alpha[i] > 0.0) {
      out[i] = log_gamma_sample(rng, alpha[i]);
      any = true;
    }
  }
  require(any, "dirichlet: all parameters zero");
  normalize_log_into(out, out);
}

std::int64_t geometric_sample(Rng& rng, double q) {
  require(q > 0.0 && q <= 1.0, "geometric: success probability must lie in (0,1]");
  if (q == 1.0) return 0;
  return static_cast<std::int64_t>(std::floor(std::log(rng.uniform_open()) / std::log1p(-q)));
}

std::int64_t poisson_sample(Rng& rng, double lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda), "poisson: invalid rate");
  if (lambda == 0.0) return 0;
  if (lambda < 10.0) {
    const double L = std::exp(-lambda);
    std::int64_t k = 0;
    double p = rng.uniform();
    while (p > L) {
      ++k;
      p *= rng.uniform();
    }
    return k;
  }
  // PTRS (Hormann 1993).
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double U = rng.uniform() - 0.5;
    const double V = rng.uniform_open();
    const double us = 0.5 - std::abs(U);
    const double k = std::floor((2.0 * a / us + b) * U + lambda + 0.43);
    if (us >= 0.07 && V <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && V > us)) continue;
    if (std::log(V) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::int64_t>(k);
  }
}

std::int64_t negbin_sample(Rng& rng, int r, double p) {
  require(r >= 1 && p >= 0.0 && p < 1.0, "negbin: invalid parameters");
  if (p == 0.0) return 0;
  const double rate = (1.0 - p) / p;
  return poisson_sample(rng, gamma_sample(rng, static_cast<double>(r), rate));
}

bool bernoulli_sample(Rng& rng, double p) { return rng.uniform() < p; }

std::size_t categorical_sample(Rng& rng, std::span<const double> weights) {
  require(!weights.empty(), "categorical: empty weights");
  double total = 0.0;
  for (double w : weights) total += w;
  require(total > 0.0 && std::isfinite(total), "categorical: zero total weight");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::size_t categorical_sample(Rng& rng, const SimplexVector& w) { return categorical_sample(rng, w.weights()); }

std::size_t categorical_from_log(Rng& rng, std::span<const double> logw) {
  const double m = log_sum_exp(logw);
  require(std::isfinite(m), "categorical: all log weights are -inf");
  std::vector<double> w(logw.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logw[i] - m);
  return categorical_sample(rng, w);
}

}  // namespace flexload
