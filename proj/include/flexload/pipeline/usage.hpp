#pragma once

#include <string>
#include <vector>

#include "flexload/pipeline/trace.hpp"

namespace flexload::pipeline {

struct DeviceUsage {
  std::string device;
  std::size_t houses_present = 0;  // houses with the column
  std::size_t houses_used = 0;     // houses with a strictly positive reading
  std::vector<double> shares;      // device energy / total energy, per using house
  double median = 0.0, q1 = 0.0, q3 = 0.0;
};

// Devices ranked by houses used, then by median share; unused devices last.
std::vector<DeviceUsage> device_usage_report(const std::vector<Dataset>& corpus);

}  // namespace flexload::pipeline
