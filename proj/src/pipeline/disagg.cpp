#include "flexload/pipeline/disagg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flexload/errors.hpp"

namespace flexload::pipeline {

smc::FactorialConfig factorial_config(const HyperParamBundle& bundle, const RunConfig& cfg) {
  bundle.validate();
  smc::FactorialConfig fc;
  for (const auto& d : bundle.devices) fc.chains.push_back(chain_prior(d));
  fc.particles = cfg.particles;
  fc.joint_cap = cfg.disagg.joint_cap;
  fc.options.ess_resampling = cfg.disagg.ess_resampling;
  fc.options.workers = cfg.disagg.workers;
  return fc;
}

std::vector<int> power_rank(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<int> rank(values.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r);
  return rank;
}

int truth_state(const DeviceHyper& d, double reading) {
  std::vector<double> means;
  for (const auto& c : d.components) means.push_back(c.mean);
  std::size_t best = 0;
  for (std::size_t m = 1; m < means.size(); ++m)
    if (std::abs(reading - means[m]) < std::abs(reading - means[best])) best = m;
  return power_rank(means)[best];
}

DisaggResult disaggregate(const Dataset& data, const HyperParamBundle& bundle, const RunConfig& cfg, Rng& rng) {
  const auto fc = factorial_config(bundle, cfg);
  DisaggResult res;
  const std::size_t K = bundle.devices.size();
  for (const auto& d : bundle.devices) res.devices.push_back(d.name);
  std::vector<int> cols(K);
  bool any_truth = false;
  for (std::size_t k = 0; k < K; ++k) {
    cols[k] = data.device_index(bundle.devices[k].name);
    any_truth = any_truth || cols[k] >= 0;
  }
  std::vector<double> sq(K, 0.0), hits(K, 0.0);
  double n = 0.0;
  for (const auto& s : data.sessions) {
    smc::FactorialFilter f(fc, rng);
    for (std::size_t t = 0; t < s.size(); ++t) {
      f.step(s.total[t], rng);
      const auto est = f.estimate();
      DisaggStep st;
      double sum = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const auto rank = power_rank(est[k].theta_mean);
        st.state.push_back(rank[static_cast<std::size_t>(est[k].map_state)]);
        st.power.push_back(est[k].power_mean);
        sum += est[k].power_mean;
        if (cols[k] >= 0) {
          const double truth = s.device[static_cast<std::size_t>(cols[k])][t];
          sq[k] += (truth - est[k].power_mean) * (truth - est[k].power_mean);
          hits[k] += truth_state(bundle.devices[k], truth) == st.state.back() ? 1.0 : 0.0;
        }
      }
      st.residual = s.total[t] - sum;
      res.steps.push_back(std::move(st));
      n += 1.0;
    }
  }
  if (any_truth && n > 0.0)
    for (std::size_t k = 0; k < K; ++k)
      if (cols[k] >= 0) res.metrics.push_back({res.devices[k], std::sqrt(sq[k] / n), hits[k] / n});
  return res;
}

}  // namespace flexload::pipeline
