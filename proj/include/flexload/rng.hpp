#pragma once

#include <cstdint>
#include <initializer_list>

namespace flexload {

// xoshiro256** with splitmix64 seeding. Child streams are derived from a
// seed and a key path, never from the parent's position, so work can be
// split across threads without changing results.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0x9E3779B97F4A7C15ULL);

  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  std::uint64_t operator()();
  std::uint64_t next() { return (*this)(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  std::uint64_t below(std::uint64_t n);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix_keys(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

}  // namespace flexload
