#pragma once

#include <cstdint>
#include <vector>

#include "flexload/pipeline/bundle.hpp"
#include "flexload/pipeline/trace.hpp"

namespace flexload::pipeline {

struct DeviceTruth {
  std::vector<int> states;            // per minute
  std::vector<double> theta;          // drawn power per state
  std::vector<double> duration_mean;  // mean of the drawn duration law per state
};

struct SynthHouse {
  Dataset data;                     // one session
  std::vector<DeviceTruth> truth;   // per device, in bundle order
};

// Device paths from an HDP-HSMM whose emission and duration laws are drawn
// from the bundle. The total is the sum of the device columns plus Normal
// meter noise of variance noise_var, clamped at zero.
SynthHouse synth_generate(const HyperParamBundle& bundle, std::size_t T, double noise_var, std::int64_t start,
                          Rng& rng, double gamma = 1.0);

}  // namespace flexload::pipeline
