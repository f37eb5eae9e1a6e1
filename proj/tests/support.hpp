#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

namespace testing_support {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double mean_se = 0.0;
  double var_se = 0.0;
};

inline Moments moments(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double m = 0.0;
  for (double x : xs) m += x;
  m /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = (x - m) * (x - m);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  return {m, m2, std::sqrt(m2 / n), std::sqrt(std::max(m4 - m2 * m2, 0.0) / n)};
}

// One-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

// Critical value at significance 0.01.
inline double ks_critical_01(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

template <class K>
double total_variation(const std::map<K, double>& p, const std::map<K, double>& q) {
  std::map<K, double> all;
  for (auto& [k, v] : p) all[k] += v;
  for (auto& [k, v] : q) all[k] -= v;
  double s = 0.0;
  for (auto& [k, v] : all) s += std::abs(v);
  return 0.5 * s;
}

}  // namespace testing_support
