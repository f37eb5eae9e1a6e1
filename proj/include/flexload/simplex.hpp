#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flexload {

// Probability vector. Entries lie in [0, 1] and sum to one within 1e-12.
class SimplexVector {
 public:
  static constexpr double kTolerance = 1e-12;

  SimplexVector() = default;
  // Validates; throws InvalidParameter.
  explicit SimplexVector(std::vector<double> w);

  // Rescales non-negative weights. Zero total is an error.
  static SimplexVector normalize(std::span<const double> w);
  static SimplexVector from_log_weights(std::span<const double> logw);
  static SimplexVector uniform(std::size_t n);
  static SimplexVector point_mass(std::size_t n, std::size_t k);

  std::size_t size() const { return w_.size(); }
  bool empty() const { return w_.empty(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> weights() const { return w_; }
  const std::vector<double>& vec() const { return w_; }
  auto begin() const { return w_.begin(); }
  auto end() const { return w_.end(); }

 private:
  std::vector<double> w_;
};

// Writes normalized exp(logw) into out. Throws when every entry is -inf.
void normalize_log_into(std::span<const double> logw, std::span<double> out);

}  // namespace flexload
