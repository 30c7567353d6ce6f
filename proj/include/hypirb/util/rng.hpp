#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace hypirb {

/// Seeded stream used everywhere randomness is consumed. Draws are defined by
/// this class rather than by <random> distributions so that sequences are
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  /// Standard normal (Marsaglia polar; the paired value is discarded so the
  /// stream has no hidden cache).
  double normal();
  std::vector<double> normals(std::size_t n);
  std::uint64_t next_u64() { return engine_(); }

  /// Independent child stream keyed by a label; does not advance this stream.
  Rng fork(std::uint64_t label) const;

  std::string state() const;
  void set_state(const std::string& text);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer, used to derive seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace hypirb
