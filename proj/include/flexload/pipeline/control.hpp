#pragma once

#include <optional>
#include <vector>

#include "flexload/dispatch.hpp"
#include "flexload/pipeline/bundle.hpp"
#include "flexload/pipeline/config.hpp"

namespace flexload::pipeline {

struct ControlResult {
  dispatch::ClosedLoopTrace trace;
  std::vector<dispatch::BodePoint> bode;
  dispatch::PiDesign design;   // fitted from the bode data
  dispatch::PiGains gains;     // gains used
  double nominal_power = 0.0;  // mean per-load power at zeta = 0
  double spectral_radius = 0.0;
  double rms_error = 0.0;      // after the transient
  double nrmse = 0.0;          // NaN for a zero reference
};

std::vector<double> sinusoid_reference(std::size_t steps, double amplitude, double period);

// Bode data and PI design for the nominal TCL model at the first ambient value.
std::vector<dispatch::BodePoint> tcl_bode(const RunConfig& cfg);

// Closed loop over the TCL fleet. With control.disagg = "fbpf" each load
// runs its own factorial filter on its house aggregate: the TCL plus
// background devices simulated from the other bundle devices, plus meter
// noise. The TCL chain prior comes from control.device in the bundle when
// given, otherwise from the TCL power.
ControlResult simulate_control(const RunConfig& cfg, const HyperParamBundle* bundle, Rng& rng);

inline constexpr double kMaxFilterCells = 5e7;  // loads x particles x chains

}  // namespace flexload::pipeline
