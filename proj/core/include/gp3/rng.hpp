#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>

namespace gp3 {

// Counter-free xoshiro256** stream. The standard-library distributions are
// implementation defined, so uniform/normal are generated here explicitly to
// keep runs bit-reproducible across compilers. State is four u64 words and
// serializes verbatim into checkpoints.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via Box-Muller. No spare caching: each call consumes
  /// exactly two uniforms, so the stream position is a pure function of the
  /// call count.
  double normal();
  double normal(double mean, double stddev);

  /// Derive an independent stream (seeded from this stream's output).
  Rng split();

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<std::uint64_t, 4> s_;
};

}  // namespace gp3
