#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flexload/dispatch.hpp"
#include "flexload/pipeline/disagg.hpp"
#include "flexload/pipeline/usage.hpp"

namespace flexload::pipeline {

// Long-format CSV, one value per row:
//   bode:   w,quantity,value            quantity in {magnitude_db, phase_deg}
//   trace:  t,series,value              series in {r, y, ybar, ytilde, zeta, e, state_<i>}
//   disagg: t,device,series,value       series in {state, power}; device "total" carries "residual"
//   usage:  rank,device,statistic,value statistic in {houses_present, houses_used, median, q1, q3, share}
std::string format_bode_csv(const std::vector<dispatch::BodePoint>& bode);
std::string format_trace_csv(const dispatch::ClosedLoopTrace& trace);
std::string format_disagg_csv(const DisaggResult& result);
std::string format_usage_csv(const std::vector<DeviceUsage>& usage);

std::vector<dispatch::BodePoint> parse_bode_csv(const std::string& text);

void emit_plot_data(const std::filesystem::path& path, const std::vector<dispatch::BodePoint>& bode);
void emit_plot_data(const std::filesystem::path& path, const dispatch::ClosedLoopTrace& trace);
void emit_plot_data(const std::filesystem::path& path, const DisaggResult& result);
void emit_plot_data(const std::filesystem::path& path, const std::vector<DeviceUsage>& usage);

}  // namespace flexload::pipeline
