#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flexload/dispatch.hpp"

namespace flexload::pipeline {

struct SynthSection {
  std::size_t T = 20000;
  std::size_t houses = 1;
  double noise_var = 25.0;  // meter noise on the total, watts^2
  std::string start = "2015-01-01T00:00";
};

struct TrainSection {
  std::size_t sweeps = 30;
  std::size_t burn_in = 10;
  std::int64_t max_duration = 400;
  double gamma = 1.0;
  double alpha = 1.0;
  int r = 2;
  double prior_strength = 10.0;  // pseudo-observations behind trained duration hyperparameters
  std::size_t em_iterations = 500;
};

struct DisaggSection {
  bool ess_resampling = false;
  std::size_t workers = 1;
  std::size_t joint_cap = 1024;
};

struct ControlSection {
  std::size_t loads = 10000;
  std::size_t steps = 1440;
  std::optional<dispatch::PiGains> gains;  // empty: fitted from the bode data
  double amplitude = 0.2;                  // fraction of the nominal mean power
  double period = 1440.0;                  // minutes
  std::size_t transient = 300;
  std::string disagg = "none";  // none | oracle | fbpf
  std::string device;           // bundle device standing for the TCL; empty: first device
  std::size_t disagg_particles = 100;
  double meter_noise_var = 25.0;
  std::size_t record_loads = 10;
  std::size_t workers = 1;
  std::size_t bode_points = 400;
  double w_min = 1e-4;
  dispatch::TclConfig tcl;
};

// Relative paths are resolved against the directory of the config file.
struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t particles = 1000;
  std::size_t weak_limit = 10;
  std::vector<std::string> devices;              // empty: every device available
  std::map<std::string, std::size_t> states;     // J per device
  std::size_t default_states = 2;
  std::filesystem::path bundle, trace, out = "out";
  std::vector<std::filesystem::path> corpus;
  SynthSection synth;
  TrainSection train;
  DisaggSection disagg;
  ControlSection control;

  std::size_t states_for(const std::string& device) const;
  void validate() const;
};

// Unknown keys are errors. Throws SchemaError.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace flexload::pipeline
