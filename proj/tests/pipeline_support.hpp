#pragma once

#include <string>

#include "flexload/pipeline/bundle.hpp"

namespace testing_support {

// Two-mode device: OFF near zero, ON at `power`, Poisson-dominated durations
// with the given means.
inline flexload::pipeline::DeviceHyper two_mode_device(const std::string& name, double power, double off_minutes,
                                                       double on_minutes, double sigma2 = 4.0) {
  using namespace flexload;
  pipeline::DeviceHyper d;
  d.name = name;
  d.weights = {0.5, 0.5};
  d.components = {{0.0, 1.0}, {power, (0.01 * power) * (0.01 * power)}};
  d.duration_weights = {0.5, 0.5};
  for (double mean : {off_minutes, on_minutes}) {
    DurationHyper h;
    h.phi = {98.0, 2.0};
    h.lambda = {400.0, 400.0 / mean};
    h.varphi = {50.0, 50.0};
    h.r = 2;
    d.duration_components.push_back(h);
  }
  d.alpha = {1.0, 1.0};
  d.sigma2 = sigma2;
  d.r = 2;
  d.form = NegBinForm::Standard;
  return d;
}

// One dominant device at ten times the others.
inline flexload::pipeline::HyperParamBundle four_device_bundle() {
  flexload::pipeline::HyperParamBundle b;
  b.devices = {two_mode_device("air_compressor", 4000.0, 40.0, 25.0, 100.0),
               two_mode_device("furnace", 450.0, 60.0, 20.0),
               two_mode_device("refrigerator", 350.0, 25.0, 15.0),
               two_mode_device("dishwasher", 400.0, 120.0, 30.0)};
  return b;
}

}  // namespace testing_support
