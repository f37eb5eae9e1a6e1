#include "flexload/pipeline/control.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>

#include "flexload/distributions.hpp"
#include "flexload/errors.hpp"
#include "flexload/hsmm.hpp"
#include "flexload/pipeline/disagg.hpp"
#include "flexload/smc.hpp"

namespace flexload::pipeline {

namespace {

// A bundle device stepped one minute at a time.
struct Background {
  Table pi;
  std::vector<double> theta;
  std::vector<DurationPmf> durations;
  double sigma2 = 1.0;
  int state = -1;
  std::int64_t left = 0;

  double step(Rng& rng) {
    const std::size_t J = theta.size();
    if (state < 0) {
      state = static_cast<int>(rng.below(J));
      left = durations[static_cast<std::size_t>(state)].sample(rng);
    } else if (left == 0) {
      if (J > 1) state = static_cast<int>(categorical_sample(rng, pi.row(static_cast<std::size_t>(state))));
      left = durations[static_cast<std::size_t>(state)].sample(rng);
    }
    --left;
    return std::max(0.0, normal_sample(rng, theta[static_cast<std::size_t>(state)], sigma2));
  }
};

Background make_background(const DeviceHyper& d, Rng& rng) {
  Background b;
  const std::size_t J = d.num_states();
  b.sigma2 = d.sigma2;
  b.pi = Table(J, J);
  if (J > 1) {
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t l = 0; l < J; ++l) b.pi(j, l) = j == l ? 0.0 : 1.0 / static_cast<double>(J - 1);
  }
  for (std::size_t j = 0; j < J; ++j) {
    b.theta.push_back(std::max(0.0, normal_sample(rng, d.components[j].mean, d.components[j].var)));
    const DurationHyper& h = d.duration_components[j];
    DurationParams w;
    w.phi = hsmm::clamp_open_unit(h.phi.a / (h.phi.a + h.phi.b));
    w.lambda = h.lambda.shape / h.lambda.rate;
    w.varphi = hsmm::clamp_open_unit(h.varphi.a / (h.varphi.a + h.varphi.b));
    w.r = h.r;
    b.durations.push_back(DurationPmf::from_params(w, d.form));
  }
  return b;
}

struct House {
  std::unique_ptr<smc::FactorialFilter> filter;
  std::vector<Background> background;
};

}  // namespace

std::vector<double> sinusoid_reference(std::size_t steps, double amplitude, double period) {
  std::vector<double> r(steps);
  for (std::size_t t = 0; t < steps; ++t)
    r[t] = amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
  return r;
}

std::vector<dispatch::BodePoint> tcl_bode(const RunConfig& cfg) {
  const auto m = dispatch::tcl_nominal_model(cfg.control.tcl, cfg.control.tcl.ambient_at(0));
  return dispatch::bode_points(m, 0.0,
                               dispatch::log_frequencies(cfg.control.w_min, std::numbers::pi, cfg.control.bode_points));
}

ControlResult simulate_control(const RunConfig& cfg, const HyperParamBundle* bundle, Rng& rng) {
  const auto& cc = cfg.control;
  const auto schedule = dispatch::tcl_schedule(cc.tcl, cc.steps);
  const auto& m0 = schedule.at(0);
  ControlResult res;
  res.bode = tcl_bode(cfg);
  res.design = dispatch::fit_pi_gains(res.bode);
  res.gains = cc.gains.value_or(res.design.gains);
  res.nominal_power = dispatch::mean_power(m0, dispatch::invariant_pmf(dispatch::nominal_kernel(m0)));
  res.spectral_radius = dispatch::closed_loop_spectral_radius(m0, 0.0, res.gains);

  dispatch::ClosedLoopOptions opt;
  opt.loads = cc.loads;
  opt.gains = res.gains;
  opt.record_loads = cc.record_loads;
  opt.workers = cc.workers;

  std::vector<House> houses;
  smc::FactorialConfig fc;
  if (cc.disagg == "oracle") {
    opt.disagg = [&m0](std::size_t, std::size_t, std::size_t x, Rng&) {
      return dispatch::LoadEstimate{m0.u_of(x), m0.U};
    };
  } else if (cc.disagg == "fbpf") {
    smc::ChainPrior tcl_prior;
    std::vector<const DeviceHyper*> others;
    const DeviceHyper* own = nullptr;
    if (bundle != nullptr) {
      own = cc.device.empty() ? &bundle->devices.front() : &bundle->device(cc.device);
      for (const auto& d : bundle->devices)
        if (&d != own) others.push_back(&d);
    }
    if (own != nullptr) {
      require(own->num_states() == 2, "control: the TCL device must have two states");
      tcl_prior = chain_prior(*own);
    } else {
      const double p = cc.tcl.power_on;
      tcl_prior.alpha = {1.0, 1.0};
      tcl_prior.emission = {{0.0, 0.0025 * p * p}, {p, 0.0025 * p * p}};
      tcl_prior.sigma2 = std::max(cc.meter_noise_var, 1.0);
    }
    fc.chains.push_back(tcl_prior);
    for (const auto* d : others) fc.chains.push_back(chain_prior(*d));
    fc.particles = cc.disagg_particles;
    require(static_cast<double>(cc.loads) * static_cast<double>(fc.particles) * static_cast<double>(fc.chains.size()) <=
                kMaxFilterCells,
            "control: loads x particles x devices exceeds the per-load filter budget");
    houses.resize(cc.loads);
    const std::uint64_t key = rng();
    for (std::size_t i = 0; i < cc.loads; ++i) {
      Rng hr = Rng::derive(key, {i});
      houses[i].filter = std::make_unique<smc::FactorialFilter>(fc, hr);
      for (const auto* d : others) houses[i].background.push_back(make_background(*d, hr));
    }
    const double noise = cc.meter_noise_var;
    opt.disagg = [&houses, &m0, noise](std::size_t i, std::size_t, std::size_t x, Rng& r) {
      House& h = houses[i];
      double y = m0.power(x);
      for (auto& b : h.background) y += b.step(r);
      if (noise > 0.0) y = std::max(0.0, y + normal_sample(r, 0.0, noise));
      h.filter->step(y, r);
      const auto est = h.filter->estimate()[0];
      const auto rank = power_rank(est.theta_mean);
      std::vector<double> power = est.theta_mean;
      std::sort(power.begin(), power.end());
      return dispatch::LoadEstimate{static_cast<std::size_t>(rank[static_cast<std::size_t>(est.map_state)]), power};
    };
  }

  const auto reference = sinusoid_reference(cc.steps, cc.amplitude * res.nominal_power, cc.period);
  res.trace = dispatch::closed_loop_simulate(schedule, reference, opt, rng);
  double se = 0.0, sr = 0.0;
  for (std::size_t t = cc.transient; t < cc.steps; ++t) {
    se += (res.trace.r[t] - res.trace.ytilde[t]) * (res.trace.r[t] - res.trace.ytilde[t]);
    sr += res.trace.r[t] * res.trace.r[t];
  }
  const double n = static_cast<double>(cc.steps - cc.transient);
  res.rms_error = std::sqrt(se / n);
  res.nrmse = sr > 0.0 ? std::sqrt(se / sr) : std::nan("");
  return res;
}

}  // namespace flexload::pipeline
