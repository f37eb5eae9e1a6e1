#include "flexload/duration.hpp"

#include <cmath>

#include "flexload/errors.hpp"
#include "flexload/numerics.hpp"

namespace flexload {

void DurationHyper::validate() const {
  require(phi.a > 0 && phi.b > 0 && lambda.shape > 0 && lambda.rate > 0 && varphi.a > 0 && varphi.b > 0,
          "duration hyper: parameters must be positive");
  require(r >= 1, "duration hyper: r must be >= 1");
}

void validate(const DurationParams& w) {
  require(w.phi >= 0.0 && w.phi <= 1.0, "duration: phi must lie in [0,1]");
  require(w.lambda > 0.0, "duration: lambda must be positive");
  require(w.r >= 1, "duration: r must be >= 1");
  require(w.varphi > 0.0 && w.varphi < 1.0, "duration: varphi must lie in (0,1)");
}

double duration_logpmf(std::int64_t d, const DurationParams& w, NegBinForm form) {
  validate(w);
  const double a = w.phi > 0.0 ? std::log(w.phi) + poisson_logpmf(d, w.lambda) : kNegInf;
  const double b = w.phi < 1.0 ? std::log1p(-w.phi) + negbin_logpmf(d, w.r, w.varphi, form) : kNegInf;
  return log_add(a, b);
}

DurationPmf DurationPmf::from_params(const DurationParams& w, NegBinForm form) {
  validate(w);
  DurationPmf p;
  p.kind_ = Kind::Mixture;
  p.w_ = w;
  p.form_ = form;
  // Mass of each component on d >= 1.
  const double pois = -std::expm1(-w.lambda);
  const double q0 = std::pow(1.0 - w.varphi, w.r);
  const double nb = form == NegBinForm::Verbatim ? (1.0 - q0) / w.varphi : 1.0 - q0;
  p.log_norm_ = std::log(w.phi * pois + (1.0 - w.phi) * nb);
  return p;
}

DurationPmf DurationPmf::from_table(std::vector<double> table) {
  require(!table.empty(), "duration table: empty");
  KahanSum s;
  for (double x : table) {
    require(x >= 0.0 && std::isfinite(x), "duration table: invalid entry");
    s.add(x);
  }
  require(s.value() > 0.0, "duration table: zero mass");
  for (double& x : table) x /= s.value();
  DurationPmf p;
  p.kind_ = Kind::Table;
  p.table_ = std::move(table);
  return p;
}

DurationPmf DurationPmf::geometric(double stay) {
  require(stay >= 0.0 && stay < 1.0, "geometric duration: stay must lie in [0,1)");
  DurationPmf p;
  p.kind_ = Kind::Geometric;
  p.stay_ = stay;
  return p;
}

double DurationPmf::log_pmf(std::int64_t d) const {
  if (d < 1) return kNegInf;
  switch (kind_) {
    case Kind::Mixture:
      return duration_logpmf(d, w_, form_) - log_norm_;
    case Kind::Table:
      if (d > static_cast<std::int64_t>(table_.size()) || table_[d - 1] == 0.0) return kNegInf;
      return std::log(table_[d - 1]);
    case Kind::Geometric:
      if (stay_ == 0.0) return d == 1 ? 0.0 : kNegInf;
      return static_cast<double>(d - 1) * std::log(stay_) + std::log1p(-stay_);
  }
  return kNegInf;
}

void DurationPmf::tabulate(std::int64_t n, std::vector<double>& lp, std::vector<double>& lt) const {
  require(n >= 0, "duration: negative tabulation length");
  lp.assign(static_cast<std::size_t>(n), kNegInf);
  lt.assign(static_cast<std::size_t>(n) + 1, 0.0);
  KahanSum cum;
  for (std::int64_t d = 1; d <= n; ++d) {
    lp[d - 1] = log_pmf(d);
    if (kind_ == Kind::Geometric) {
      lt[d] = stay_ == 0.0 ? kNegInf : static_cast<double>(d) * std::log(stay_);
      continue;
    }
    cum.add(std::exp(lp[d - 1]));
    const double tail = 1.0 - cum.value();
    lt[d] = tail > 0.0 ? std::log(tail) : kNegInf;
  }
}

std::optional<std::int64_t> DurationPmf::max_support() const {
  if (kind_ == Kind::Table) {
    for (std::size_t i = table_.size(); i > 0; --i)
      if (table_[i - 1] > 0.0) return static_cast<std::int64_t>(i);
  }
  if (kind_ == Kind::Geometric && stay_ == 0.0) return 1;
  return std::nullopt;
}

namespace {

// Inversion over d > n for an unnormalized log pmf, truncated once the
// remaining terms are negligible beyond `past_mode`.
template <class LogPmf>
std::int64_t walk_sample(Rng& rng, std::int64_t n, std::optional<std::int64_t> top, double past_mode,
                         const LogPmf& log_pmf) {
  double acc = kNegInf;
  double prev = kNegInf;
  std::int64_t last = n + 1;
  for (std::int64_t d = n + 1;; ++d) {
    if (top && d > *top) break;
    const double l = log_pmf(d);
    acc = log_add(acc, l);
    if (l > kNegInf) last = d;
    if (l < prev && l < acc - 40.0 && static_cast<double>(d) > past_mode) break;
    prev = l;
    if (d - n > 100000000) break;
  }
  require(acc > kNegInf, "duration: conditioning event has zero mass");
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::int64_t k = n + 1; k <= last; ++k) {
    cum += std::exp(log_pmf(k) - acc);
    if (u < cum) return k;
  }
  return last;
}

}  // namespace

std::int64_t DurationPmf::sample_greater(Rng& rng, std::int64_t n) const {
  require(n >= 0, "duration: negative conditioning length");
  const auto top = max_support();
  if (top) require(*top > n, "duration: conditioning event has zero mass");
  if (kind_ == Kind::Geometric) return n + 1 + geometric_sample(rng, 1.0 - stay_);
  if (kind_ == Kind::Table) return walk_sample(rng, n, top, 0.0, [this](std::int64_t d) { return log_pmf(d); });

  const double lam = w_.lambda;
  const double pois_mode = lam + 10.0 * std::sqrt(lam) + 10.0;
  if (n > 0)
    return walk_sample(rng, n, top, pois_mode, [this](std::int64_t d) { return log_pmf(d); });

  // Pick a component by its mass on d >= 1, then draw the zero-truncated
  // component. Both negative-binomial forms restrict the standard law to d >= 1.
  const double pois = -std::expm1(-lam);
  const double nb_pos = 1.0 - std::pow(1.0 - w_.varphi, w_.r);
  const double nb = form_ == NegBinForm::Verbatim ? nb_pos / w_.varphi : nb_pos;
  const double pick = w_.phi * pois / (w_.phi * pois + (1.0 - w_.phi) * nb);
  if (rng.uniform() < pick) {
    if (pois < 0.5)
      return walk_sample(rng, 0, std::nullopt, pois_mode, [lam](std::int64_t d) { return poisson_logpmf(d, lam); });
    for (;;) {
      const auto d = poisson_sample(rng, lam);
      if (d >= 1) return d;
    }
  }
  if (nb_pos < 0.5) {
    const int r = w_.r;
    const double p = w_.varphi;
    return walk_sample(rng, 0, std::nullopt, r * p / (1.0 - p) + 10.0,
                       [r, p](std::int64_t d) { return negbin_logpmf(d, r, p, NegBinForm::Standard); });
  }
  for (;;) {
    const auto d = negbin_sample(rng, w_.r, w_.varphi);
    if (d >= 1) return d;
  }
}

double DurationPmf::mean() const {
  switch (kind_) {
    case Kind::Mixture: {
      const double nb = form_ == NegBinForm::Verbatim ? w_.r / (1.0 - w_.varphi)
                                                       : w_.r * w_.varphi / (1.0 - w_.varphi);
      return (w_.phi * w_.lambda + (1.0 - w_.phi) * nb) / std::exp(log_norm_);
    }
    case Kind::Table: {
      double m = 0.0;
      for (std::size_t i = 0; i < table_.size(); ++i) m += static_cast<double>(i + 1) * table_[i];
      return m;
    }
    case Kind::Geometric:
      return 1.0 / (1.0 - stay_);
  }
  return 0.0;
}

}  // namespace flexload
