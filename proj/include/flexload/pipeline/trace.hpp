#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace flexload::pipeline {

// Contiguous run of 1-minute samples.
struct Session {
  std::int64_t start = 0;                  // minutes since epoch
  std::vector<std::vector<double>> device;  // [device][t]
  std::vector<double> total;

  std::size_t size() const { return total.size(); }
};

struct Dataset {
  std::vector<std::string> devices;
  std::vector<Session> sessions;

  std::size_t samples() const;
  // Index of a device column, or -1.
  int device_index(const std::string& name) const;
};

inline constexpr std::int64_t kMaxFilledGap = 5;  // minutes

// CSV with a "timestamp" column, one column per device and a "total" column.
// Negatives are clamped to zero. Missing cells are forward-filled (backward
// at the start of a session, zero when a column is empty in a session). Gaps
// of at most kMaxFilledGap missing minutes are forward-filled; longer gaps
// start a new session. Throws SchemaError.
Dataset parse_trace(const std::string& text);
Dataset load_trace(const std::filesystem::path& path);

std::string format_trace(const Dataset& d);
void write_trace(const std::filesystem::path& path, const Dataset& d);

}  // namespace flexload::pipeline
