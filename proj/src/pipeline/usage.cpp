#include "flexload/pipeline/usage.hpp"

#include <algorithm>
#include <map>

#include "flexload/numerics.hpp"

namespace flexload::pipeline {

namespace {

// Linear interpolation between order statistics.
double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

}  // namespace

std::vector<DeviceUsage> device_usage_report(const std::vector<Dataset>& corpus) {
  std::map<std::string, DeviceUsage> by_name;
  for (const auto& house : corpus) {
    KahanSum total;
    for (const auto& s : house.sessions)
      for (double v : s.total) total.add(v);
    for (std::size_t k = 0; k < house.devices.size(); ++k) {
      auto& u = by_name[house.devices[k]];
      u.device = house.devices[k];
      ++u.houses_present;
      KahanSum e;
      bool used = false;
      for (const auto& s : house.sessions)
        for (double v : s.device[k]) {
          e.add(v);
          used = used || v > 0.0;
        }
      if (!used) continue;
      ++u.houses_used;
      if (total.value() > 0.0) u.shares.push_back(e.value() / total.value());
    }
  }
  std::vector<DeviceUsage> out;
  for (auto& [name, u] : by_name) {
    u.median = quantile(u.shares, 0.5);
    u.q1 = quantile(u.shares, 0.25);
    u.q3 = quantile(u.shares, 0.75);
    out.push_back(std::move(u));
  }
  std::stable_sort(out.begin(), out.end(), [](const DeviceUsage& a, const DeviceUsage& b) {
    if (a.houses_used != b.houses_used) return a.houses_used > b.houses_used;
    return a.median > b.median;
  });
  return out;
}

}  // namespace flexload::pipeline
