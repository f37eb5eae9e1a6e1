#include "flexload/pipeline/synth.hpp"

#include <algorithm>
#include <numeric>

#include "flexload/distributions.hpp"
#include "flexload/errors.hpp"
#include "flexload/hsmm.hpp"

namespace flexload::pipeline {

namespace {

DurationParams draw_duration(const DeviceHyper& d, Rng& rng) {
  const std::size_t m = categorical_sample(rng, d.duration_weights);
  const DurationHyper& h = d.duration_components[m];
  DurationParams w;
  w.phi = hsmm::clamp_open_unit(beta_sample(rng, h.phi.a, h.phi.b));
  w.lambda = std::max(gamma_sample(rng, h.lambda.shape, h.lambda.rate), 1e-9);
  w.varphi = hsmm::clamp_open_unit(beta_sample(rng, h.varphi.a, h.varphi.b));
  w.r = h.r;
  return w;
}

}  // namespace

SynthHouse synth_generate(const HyperParamBundle& bundle, std::size_t T, double noise_var, std::int64_t start,
                          Rng& rng, double gamma) {
  bundle.validate();
  require(T >= 1, "synth: T must be >= 1");
  require(noise_var >= 0.0, "synth: noise variance must be >= 0");
  SynthHouse h;
  h.data.sessions.resize(1);
  Session& s = h.data.sessions[0];
  s.start = start;
  s.total.assign(T, 0.0);
  for (const auto& d : bundle.devices) {
    h.data.devices.push_back(d.name);
    const std::size_t J = d.num_states();
    DeviceTruth tr;
    hsmm::HsmmModel model;
    model.sigma2 = d.sigma2;
    model.pi = Table(J, J);
    if (J > 1) {
      const auto hdp = hdp::make_weak_limit_hdp(J, gamma, std::accumulate(d.alpha.begin(), d.alpha.end(), 0.0), rng);
      model.pi = hdp::normalized_offdiag(hdp.pi);
    }
    for (std::size_t j = 0; j < J; ++j) {
      tr.theta.push_back(std::max(0.0, normal_sample(rng, d.components[j].mean, d.components[j].var)));
      const auto pmf = DurationPmf::from_params(draw_duration(d, rng), d.form);
      tr.duration_mean.push_back(pmf.mean());
      model.durations.push_back(pmf);
    }
    model.theta = tr.theta;
    if (J == 1) {
      tr.states.assign(T, 0);
      std::vector<double> y(T);
      for (auto& v : y) v = std::max(0.0, normal_sample(rng, tr.theta[0], d.sigma2));
      s.device.push_back(std::move(y));
    } else {
      auto sim = hsmm::simulate_hsmm(model, T, rng);
      tr.states = sim.path.expand();
      s.device.push_back(std::move(sim.y));
    }
    for (std::size_t t = 0; t < T; ++t) s.total[t] += s.device.back()[t];
    h.truth.push_back(std::move(tr));
  }
  if (noise_var > 0.0)
    for (auto& v : s.total) v = std::max(0.0, v + normal_sample(rng, 0.0, noise_var));
  return h;
}

}  // namespace flexload::pipeline
