#include "flexload/simplex.hpp"

#include <cmath>

#include "flexload/errors.hpp"
#include "flexload/numerics.hpp"

namespace flexload {

SimplexVector::SimplexVector(std::vector<double> w) : w_(std::move(w)) {
  require(!w_.empty(), "simplex: empty vector");
  double s = 0.0;
  for (double x : w_) {
    require(std::isfinite(x) && x >= 0.0 && x <= 1.0, "simplex: entry outside [0,1]");
    s += x;
  }
  require(std::abs(s - 1.0) <= kTolerance * static_cast<double>(w_.size() > 16 ? w_.size() / 16 + 1 : 1),
          "simplex: entries do not sum to one");
}

SimplexVector SimplexVector::normalize(std::span<const double> w) {
  require(!w.empty(), "simplex: empty vector");
  KahanSum s;
  for (double x : w) {
    require(std::isfinite(x) && x >= 0.0, "simplex: negative or non-finite weight");
    s.add(x);
  }
  require(s.value() > 0.0, "simplex: zero total weight");
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] / s.value();
  SimplexVector v;
  v.w_ = std::move(out);
  return v;
}

SimplexVector SimplexVector::from_log_weights(std::span<const double> logw) {
  SimplexVector v;
  v.w_.resize(logw.size());
  normalize_log_into(logw, v.w_);
  return v;
}

void normalize_log_into(std::span<const double> logw, std::span<double> out) {
  require(!logw.empty() && out.size() == logw.size(), "simplex: size mismatch");
  const double m = log_sum_exp(logw);
  require(std::isfinite(m), "simplex: all log weights are -inf");
  KahanSum s;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(logw[i] - m);
    s.add(out[i]);
  }
  for (double& x : out) x /= s.value();
}

SimplexVector SimplexVector::uniform(std::size_t n) {
  require(n > 0, "simplex: empty vector");
  SimplexVector v;
  v.w_.assign(n, 1.0 / static_cast<double>(n));
  return v;
}

SimplexVector SimplexVector::point_mass(std::size_t n, std::size_t k) {
  require(k < n, "simplex: index out of range");
  SimplexVector v;
  v.w_.assign(n, 0.0);
  v.w_[k] = 1.0;
  return v;
}

}  // namespace flexload
