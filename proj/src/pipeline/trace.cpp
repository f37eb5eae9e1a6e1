#include "flexload/pipeline/trace.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>

#include "flexload/errors.hpp"
#include "flexload/pipeline/io.hpp"

namespace flexload::pipeline {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i)
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct Row {
  std::int64_t t;
  std::vector<std::optional<double>> v;  // devices then total
};

void fill_column(std::vector<std::optional<double>*>& col, std::vector<double>& out) {
  out.assign(col.size(), 0.0);
  std::optional<double> first;
  for (auto* c : col)
    if (c->has_value()) {
      first = *c;
      break;
    }
  double last = first.value_or(0.0);
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (col[i]->has_value()) last = **col[i];
    out[i] = last;
  }
}

Session build_session(std::vector<Row>& rows, std::size_t devices) {
  Session s;
  s.start = rows.front().t;
  s.device.resize(devices);
  for (std::size_t c = 0; c <= devices; ++c) {
    std::vector<std::optional<double>*> col;
    col.reserve(rows.size());
    for (auto& r : rows) col.push_back(&r.v[c]);
    fill_column(col, c < devices ? s.device[c] : s.total);
  }
  return s;
}

}  // namespace

std::size_t Dataset::samples() const {
  std::size_t n = 0;
  for (const auto& s : sessions) n += s.size();
  return n;
}

int Dataset::device_index(const std::string& name) const {
  const auto it = std::find(devices.begin(), devices.end(), name);
  return it == devices.end() ? -1 : static_cast<int>(it - devices.begin());
}

Dataset parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header_line = line;
      break;
    }
  }
  if (header_line.empty()) throw SchemaError("trace: empty file");
  header = split_csv(header_line);
  Dataset d;
  int ts_col = -1, total_col = -1;
  std::vector<int> dev_cols;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name(trim(header[i]));
    if (name.empty()) throw SchemaError("trace: empty column name");
    if (!seen.insert(name).second) throw SchemaError("trace: duplicate column '" + name + "'");
    if (name == "timestamp")
      ts_col = static_cast<int>(i);
    else if (name == "total")
      total_col = static_cast<int>(i);
    else {
      d.devices.push_back(name);
      dev_cols.push_back(static_cast<int>(i));
    }
  }
  if (ts_col < 0) throw SchemaError("trace: missing 'timestamp' column");
  if (total_col < 0) throw SchemaError("trace: missing 'total' column");

  std::vector<Row> rows;
  const std::size_t nd = d.devices.size();
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size())
      throw SchemaError("trace: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                        " fields, expected " + std::to_string(header.size()));
    Row r;
    r.t = parse_timestamp(trim(f[static_cast<std::size_t>(ts_col)]));
    r.v.resize(nd + 1);
    auto cell = [&](int c) -> std::optional<double> {
      const auto s = trim(f[static_cast<std::size_t>(c)]);
      if (s.empty()) return std::nullopt;
      double v;
      try {
        v = parse_number(s);
      } catch (const SchemaError& e) {
        throw SchemaError("trace: line " + std::to_string(lineno) + ": " + e.what());
      }
      if (!std::isfinite(v)) throw SchemaError("trace: line " + std::to_string(lineno) + ": non-finite value");
      return std::max(v, 0.0);
    };
    for (std::size_t k = 0; k < nd; ++k) r.v[k] = cell(dev_cols[k]);
    r.v[nd] = cell(total_col);
    if (!rows.empty() && r.t <= rows.back().t)
      throw SchemaError("trace: line " + std::to_string(lineno) + ": timestamps must increase");
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw SchemaError("trace: no data rows");

  std::vector<Row> cur;
  for (auto& r : rows) {
    if (!cur.empty()) {
      const std::int64_t missing = r.t - cur.back().t - 1;
      if (missing > kMaxFilledGap) {
        d.sessions.push_back(build_session(cur, nd));
        cur.clear();
      } else {
        for (std::int64_t k = 0; k < missing; ++k) {
          Row fill{cur.back().t + 1, std::vector<std::optional<double>>(nd + 1)};
          cur.push_back(std::move(fill));
        }
      }
    }
    cur.push_back(std::move(r));
  }
  d.sessions.push_back(build_session(cur, nd));
  return d;
}

Dataset load_trace(const std::filesystem::path& path) { return parse_trace(read_file(path)); }

std::string format_trace(const Dataset& d) {
  std::string out = "timestamp";
  for (const auto& n : d.devices) out += "," + n;
  out += ",total\n";
  for (const auto& s : d.sessions) {
    require(s.device.size() == d.devices.size(), "trace: session column count");
    for (std::size_t t = 0; t < s.size(); ++t) {
      out += format_timestamp(s.start + static_cast<std::int64_t>(t));
      for (const auto& c : s.device) out += "," + format_number(c.at(t));
      out += "," + format_number(s.total[t]) + "\n";
    }
  }
  return out;
}

void write_trace(const std::filesystem::path& path, const Dataset& d) { atomic_write(path, format_trace(d)); }

}  // namespace flexload::pipeline
