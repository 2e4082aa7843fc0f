#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gp3/tensor.hpp"

namespace gp3 {

/// Versioned binary container for training state: named float arrays, named
/// RNG states, named integers, the step counter and config hash. Round-trips
/// bit-exactly; loading validates magic, version and length before returning.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t step = 0;
  std::uint64_t config_hash = 0;
  std::vector<std::pair<std::string, std::int64_t>> ints;
  std::vector<std::pair<std::string, std::array<std::uint64_t, 4>>> rngs;
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  const std::vector<double>& array(const std::string& name) const;
  std::array<std::uint64_t, 4> rng(const std::string& name) const;
  std::int64_t integer(const std::string& name) const;
};

}  // namespace gp3
