#include "flexload/pipeline/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "flexload/errors.hpp"

namespace flexload::pipeline {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", std::abs(x));
  // buf = "d.dddddddde[+-]XX"
  std::string digits;
  digits.push_back(buf[0]);
  digits.append(buf + 2, 8);
  const int e = std::atoi(buf + 11);
  std::string out = x < 0 ? "-" : "";
  if (e >= 8) {
    out += digits;
    out.append(static_cast<std::size_t>(e - 8), '0');
  } else if (e >= 0) {
    out += digits.substr(0, static_cast<std::size_t>(e) + 1);
    out += '.';
    out += digits.substr(static_cast<std::size_t>(e) + 1);
  } else {
    out += "0.";
    out.append(static_cast<std::size_t>(-e - 1), '0');
    out += digits;
  }
  return out;
}

double parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "nan") return std::nan("");
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw SchemaError("not a number: '" + std::string(s) + "'");
  return v;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

int field(std::string_view s, std::size_t pos, std::size_t len) {
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') throw SchemaError("bad timestamp: '" + std::string(s) + "'");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

}  // namespace

std::int64_t parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  if (s.size() != 16 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':')
    throw SchemaError("bad timestamp: '" + std::string(s) + "' (expected YYYY-MM-DDTHH:MM)");
  const year_month_day ymd{year{field(s, 0, 4)}, month{static_cast<unsigned>(field(s, 5, 2))},
                           day{static_cast<unsigned>(field(s, 8, 2))}};
  const int hh = field(s, 11, 2), mm = field(s, 14, 2);
  if (!ymd.ok() || hh > 23 || mm > 59) throw SchemaError("bad timestamp: '" + std::string(s) + "'");
  return static_cast<std::int64_t>(sys_days{ymd}.time_since_epoch().count()) * 1440 + hh * 60 + mm;
}

std::string format_timestamp(std::int64_t minutes) {
  using namespace std::chrono;
  std::int64_t d = minutes / 1440, r = minutes % 1440;
  if (r < 0) {
    r += 1440;
    --d;
  }
  const year_month_day ymd{sys_days{days{d}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(r / 60),
                static_cast<int>(r % 60));
  return buf;
}

}  // namespace flexload::pipeline
