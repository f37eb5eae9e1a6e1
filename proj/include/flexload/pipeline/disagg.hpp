#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flexload/pipeline/bundle.hpp"
#include "flexload/pipeline/config.hpp"
#include "flexload/pipeline/trace.hpp"
#include "flexload/smc.hpp"

namespace flexload::pipeline {

// Per-minute estimates, devices in bundle order.
struct DisaggStep {
  std::vector<int> state;        // MAP state, relabelled by posterior-mean power rank
  std::vector<double> power;     // posterior-mean power
  double residual = 0.0;         // total minus the summed estimates
};

struct DeviceMetrics {
  std::string device;
  double rmse = 0.0;
  double state_accuracy = 0.0;
};

struct DisaggResult {
  std::vector<std::string> devices;
  std::vector<DisaggStep> steps;           // all sessions concatenated
  std::vector<DeviceMetrics> metrics;      // empty without ground-truth columns
};

smc::FactorialConfig factorial_config(const HyperParamBundle& bundle, const RunConfig& cfg);

// Rank of each state when states are ordered by value (ties by index).
std::vector<int> power_rank(const std::vector<double>& values);

// Ground-truth state per reading: nearest bundle component mean, by rank.
int truth_state(const DeviceHyper& d, double reading);

// Runs a fresh filter per session. Metrics cover devices with a column of the
// same name in the trace.
DisaggResult disaggregate(const Dataset& data, const HyperParamBundle& bundle, const RunConfig& cfg, Rng& rng);

}  // namespace flexload::pipeline
