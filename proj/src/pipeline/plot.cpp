#include "flexload/pipeline/plot.hpp"

#include <map>
#include <sstream>

#include "flexload/errors.hpp"
#include "flexload/pipeline/io.hpp"

namespace flexload::pipeline {

std::string format_bode_csv(const std::vector<dispatch::BodePoint>& bode) {
  std::string out = "w,quantity,value\n";
  for (const auto& b : bode) {
    const std::string w = format_number(b.w);
    out += w + ",magnitude_db," + format_number(b.magnitude_db) + "\n";
    out += w + ",phase_deg," + format_number(b.phase_deg) + "\n";
  }
  return out;
}

std::string format_trace_csv(const dispatch::ClosedLoopTrace& tr) {
  std::string out = "t,series,value\n";
  const std::pair<const char*, const std::vector<double>*> series[] = {
      {"r", &tr.r}, {"y", &tr.y}, {"ybar", &tr.ybar}, {"ytilde", &tr.ytilde}, {"zeta", &tr.zeta}, {"e", &tr.e}};
  for (std::size_t t = 0; t < tr.r.size(); ++t)
    for (const auto& [name, v] : series) out += std::to_string(t) + "," + name + "," + format_number((*v)[t]) + "\n";
  for (std::size_t i = 0; i < tr.states.size(); ++i)
    for (std::size_t t = 0; t < tr.states[i].size(); ++t)
      out += std::to_string(t) + ",state_" + std::to_string(i) + "," + std::to_string(tr.states[i][t]) + "\n";
  return out;
}

std::string format_disagg_csv(const DisaggResult& res) {
  std::string out = "t,device,series,value\n";
  for (std::size_t t = 0; t < res.steps.size(); ++t) {
    const auto& s = res.steps[t];
    const std::string ts = std::to_string(t);
    for (std::size_t k = 0; k < res.devices.size(); ++k) {
      out += ts + "," + res.devices[k] + ",state," + std::to_string(s.state[k]) + "\n";
      out += ts + "," + res.devices[k] + ",power," + format_number(s.power[k]) + "\n";
    }
    out += ts + ",total,residual," + format_number(s.residual) + "\n";
  }
  return out;
}

std::string format_usage_csv(const std::vector<DeviceUsage>& usage) {
  std::string out = "rank,device,statistic,value\n";
  for (std::size_t i = 0; i < usage.size(); ++i) {
    const auto& u = usage[i];
    const std::string p = std::to_string(i + 1) + "," + u.device + ",";
    out += p + "houses_present," + std::to_string(u.houses_present) + "\n";
    out += p + "houses_used," + std::to_string(u.houses_used) + "\n";
    out += p + "median," + format_number(u.median) + "\n";
    out += p + "q1," + format_number(u.q1) + "\n";
    out += p + "q3," + format_number(u.q3) + "\n";
    for (double s : u.shares) out += p + "share," + format_number(s) + "\n";
  }
  return out;
}

std::vector<dispatch::BodePoint> parse_bode_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "w,quantity,value") throw SchemaError("bode csv: bad header");
  std::map<double, dispatch::BodePoint> by_w;
  std::vector<double> order;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto a = line.find(','), b = line.find(',', a + 1);
    if (a == std::string::npos || b == std::string::npos) throw SchemaError("bode csv: bad row '" + line + "'");
    const double w = parse_number(line.substr(0, a));
    const std::string q = line.substr(a + 1, b - a - 1);
    const double v = parse_number(line.substr(b + 1));
    auto [it, fresh] = by_w.try_emplace(w);
    if (fresh) order.push_back(w);
    it->second.w = w;
    if (q == "magnitude_db")
      it->second.magnitude_db = v;
    else if (q == "phase_deg")
      it->second.phase_deg = v;
    else
      throw SchemaError("bode csv: unknown quantity '" + q + "'");
  }
  std::vector<dispatch::BodePoint> out;
  for (double w : order) out.push_back(by_w.at(w));
  return out;
}

void emit_plot_data(const std::filesystem::path& path, const std::vector<dispatch::BodePoint>& bode) {
  atomic_write(path, format_bode_csv(bode));
}
void emit_plot_data(const std::filesystem::path& path, const dispatch::ClosedLoopTrace& trace) {
  atomic_write(path, format_trace_csv(trace));
}
void emit_plot_data(const std::filesystem::path& path, const DisaggResult& result) {
  atomic_write(path, format_disagg_csv(result));
}
void emit_plot_data(const std::filesystem::path& path, const std::vector<DeviceUsage>& usage) {
  atomic_write(path, format_usage_csv(usage));
}

}  // namespace flexload::pipeline
