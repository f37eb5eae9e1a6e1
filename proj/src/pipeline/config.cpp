#include "flexload/pipeline/config.hpp"

#include "flexload/errors.hpp"
#include "flexload/pipeline/io.hpp"
#include "json_util.hpp"

namespace flexload::pipeline {

using detail::as;
using detail::check_object;
using detail::json;
using detail::opt;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::vector<double> number_list(const json& j, const std::string& w) {
  if (j.is_number()) return {as<double>(j, w)};
  if (!j.is_array()) throw SchemaError(w + ": expected a number or an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as<double>(j[i], w + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

std::size_t RunConfig::states_for(const std::string& device) const {
  const auto it = states.find(device);
  return it == states.end() ? default_states : it->second;
}

void RunConfig::validate() const {
  require(particles >= 1, "config: particles must be >= 1");
  require(weak_limit >= 1, "config: weak_limit must be >= 1");
  require(default_states >= 1, "config: default_states must be >= 1");
  for (const auto& [k, v] : states) require(v >= 1, "config: states for '" + k + "' must be >= 1");
  require(synth.T >= 1 && synth.houses >= 1, "config: synth.T and synth.houses must be >= 1");
  require(synth.noise_var >= 0.0, "config: synth.noise_var must be >= 0");
  parse_timestamp(synth.start);
  require(train.sweeps >= 1 && train.burn_in < train.sweeps, "config: train.burn_in must be below train.sweeps");
  require(train.max_duration >= 1, "config: train.max_duration must be >= 1");
  require(train.gamma > 0.0 && train.alpha > 0.0, "config: train.gamma and train.alpha must be positive");
  require(train.r >= 1, "config: train.r must be >= 1");
  require(train.prior_strength > 0.0, "config: train.prior_strength must be positive");
  require(disagg.workers >= 1, "config: disagg.workers must be >= 1");
  require(control.loads >= 1 && control.steps >= 1, "config: control.loads and control.steps must be >= 1");
  require(control.transient < control.steps, "config: control.transient must be below control.steps");
  require(control.period > 0.0 && control.amplitude >= 0.0, "config: control reference must be valid");
  require(control.disagg == "none" || control.disagg == "oracle" || control.disagg == "fbpf",
          "config: control.disagg must be none, oracle or fbpf");
  require(control.disagg_particles >= 1, "config: control.disagg_particles must be >= 1");
  require(control.meter_noise_var >= 0.0, "config: control.meter_noise_var must be >= 0");
  require(control.workers >= 1 && control.bode_points >= 2, "config: control.workers and bode_points");
  require(control.w_min > 0.0 && control.w_min < 3.14159, "config: control.w_min must lie in (0, pi)");
  control.tcl.validate();
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  const json root = detail::parse_json(text, "config");
  check_object(root, "config",
               {"seed", "particles", "weak_limit", "devices", "states", "default_states", "bundle", "trace", "out",
                "corpus", "synth", "train", "disagg", "control"});
  RunConfig c;
  opt(root, "seed", c.seed, "config");
  opt(root, "particles", c.particles, "config");
  opt(root, "weak_limit", c.weak_limit, "config");
  opt(root, "default_states", c.default_states, "config");
  if (root.contains("devices")) {
    const json& d = root.at("devices");
    if (!d.is_array()) throw SchemaError("config.devices: expected an array");
    for (std::size_t i = 0; i < d.size(); ++i)
      c.devices.push_back(as<std::string>(d[i], "config.devices[" + std::to_string(i) + "]"));
  }
  if (root.contains("states")) {
    const json& s = root.at("states");
    if (!s.is_object()) throw SchemaError("config.states: expected an object");
    for (auto it = s.begin(); it != s.end(); ++it) c.states[it.key()] = as<std::size_t>(it.value(), "config.states." + it.key());
  }
  if (root.contains("bundle")) c.bundle = resolve(base_dir, as<std::string>(root.at("bundle"), "config.bundle"));
  if (root.contains("trace")) c.trace = resolve(base_dir, as<std::string>(root.at("trace"), "config.trace"));
  if (root.contains("out")) c.out = resolve(base_dir, as<std::string>(root.at("out"), "config.out"));
  if (root.contains("corpus")) {
    const json& d = root.at("corpus");
    if (!d.is_array()) throw SchemaError("config.corpus: expected an array");
    for (std::size_t i = 0; i < d.size(); ++i)
      c.corpus.push_back(resolve(base_dir, as<std::string>(d[i], "config.corpus[" + std::to_string(i) + "]")));
  }
  if (root.contains("synth")) {
    const json& s = root.at("synth");
    check_object(s, "config.synth", {"T", "houses", "noise_var", "start"});
    opt(s, "T", c.synth.T, "config.synth");
    opt(s, "houses", c.synth.houses, "config.synth");
    opt(s, "noise_var", c.synth.noise_var, "config.synth");
    opt(s, "start", c.synth.start, "config.synth");
  }
  if (root.contains("train")) {
    const json& s = root.at("train");
    check_object(s, "config.train",
                 {"sweeps", "burn_in", "max_duration", "gamma", "alpha", "r", "prior_strength", "em_iterations"});
    opt(s, "sweeps", c.train.sweeps, "config.train");
    opt(s, "burn_in", c.train.burn_in, "config.train");
    opt(s, "max_duration", c.train.max_duration, "config.train");
    opt(s, "gamma", c.train.gamma, "config.train");
    opt(s, "alpha", c.train.alpha, "config.train");
    opt(s, "r", c.train.r, "config.train");
    opt(s, "prior_strength", c.train.prior_strength, "config.train");
    opt(s, "em_iterations", c.train.em_iterations, "config.train");
  }
  if (root.contains("disagg")) {
    const json& s = root.at("disagg");
    check_object(s, "config.disagg", {"ess_resampling", "workers", "joint_cap"});
    opt(s, "ess_resampling", c.disagg.ess_resampling, "config.disagg");
    opt(s, "workers", c.disagg.workers, "config.disagg");
    opt(s, "joint_cap", c.disagg.joint_cap, "config.disagg");
  }
  if (root.contains("control")) {
    const json& s = root.at("control");
    const std::string w = "config.control";
    check_object(s, w,
                 {"loads", "steps", "gains", "amplitude", "period", "transient", "disagg", "device", "disagg_particles",
                  "meter_noise_var", "record_loads", "workers", "bode_points", "w_min", "tcl"});
    opt(s, "loads", c.control.loads, w);
    opt(s, "steps", c.control.steps, w);
    if (s.contains("gains")) {
      const json& g = s.at("gains");
      if (g.is_string()) {
        if (g.get<std::string>() != "auto") throw SchemaError(w + ".gains: expected \"auto\" or {kp, ki}");
      } else {
        check_object(g, w + ".gains", {"kp", "ki"});
        dispatch::PiGains pg;
        pg.kp = as<double>(detail::need(g, "kp", w + ".gains"), w + ".gains.kp");
        pg.ki = as<double>(detail::need(g, "ki", w + ".gains"), w + ".gains.ki");
        c.control.gains = pg;
      }
    }
    opt(s, "amplitude", c.control.amplitude, w);
    opt(s, "period", c.control.period, w);
    opt(s, "transient", c.control.transient, w);
    opt(s, "disagg", c.control.disagg, w);
    opt(s, "device", c.control.device, w);
    opt(s, "disagg_particles", c.control.disagg_particles, w);
    opt(s, "meter_noise_var", c.control.meter_noise_var, w);
    opt(s, "record_loads", c.control.record_loads, w);
    opt(s, "workers", c.control.workers, w);
    opt(s, "bode_points", c.control.bode_points, w);
    opt(s, "w_min", c.control.w_min, w);
    if (s.contains("tcl")) {
      const json& t = s.at("tcl");
      const std::string tw = w + ".tcl";
      check_object(t, tw,
                   {"ambient", "time_constant", "cooling_rate", "theta_lo", "theta_hi", "grid", "margin", "power_on",
                    "switching_noise"});
      auto& tc = c.control.tcl;
      if (t.contains("ambient")) tc.ambient = number_list(t.at("ambient"), tw + ".ambient");
      opt(t, "time_constant", tc.time_constant, tw);
      opt(t, "cooling_rate", tc.cooling_rate, tw);
      opt(t, "theta_lo", tc.theta_lo, tw);
      opt(t, "theta_hi", tc.theta_hi, tw);
      opt(t, "grid", tc.grid, tw);
      opt(t, "margin", tc.margin, tw);
      opt(t, "power_on", tc.power_on, tw);
      opt(t, "switching_noise", tc.switching_noise, tw);
    }
  }
  try {
    c.validate();
  } catch (const InvalidParameter& e) {
    throw SchemaError(e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.has_parent_path() ? path.parent_path() : std::filesystem::path{});
}

}  // namespace flexload::pipeline
