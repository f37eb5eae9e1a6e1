#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace flexload::pipeline {

// Fixed decimal notation with 9 significant digits; "nan", "inf", "-inf" for
// non-finite values and "0" for zero.
std::string format_number(double x);

// Parses a decimal number; the whole field must be consumed.
double parse_number(std::string_view s);

// Writes to a sibling temporary file, then renames over the target.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// FNV-1a over the bytes.
std::uint64_t fnv1a(std::string_view bytes);

// Minutes since 1970-01-01T00:00 UTC <-> "YYYY-MM-DDTHH:MM".
std::int64_t parse_timestamp(std::string_view s);
std::string format_timestamp(std::int64_t minutes);

}  // namespace flexload::pipeline
