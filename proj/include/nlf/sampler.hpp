#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "nlf/domain_grid.hpp"
#include "nlf/verdict.hpp"

namespace nlf {

/// Sample budget and seed; every checker records both so a run can be replayed.
struct Sampler {
  std::size_t budget = 2000;
  std::uint64_t seed = kDefaultSeed;
};

/// Platform-stable random source: mt19937_64 plus hand-written transforms,
/// since std distributions differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  double sign() { return (engine_() & 1u) ? 1.0 : -1.0; }

  /// Point in the open box; one sample in four is pushed geometrically
  /// towards a face so boundary singularities get probed.
  void point_in(const Domain& d, std::span<double> out);

  /// Real value mixing several magnitudes: uniform on [-1,1], [-4,4],
  /// [-16,16], and log-uniform magnitudes in [1e-6, 1e2].
  double mixed_scalar();
  void mixed_vector(std::span<double> out);

 private:
  std::mt19937_64 engine_;
};

}  // namespace nlf
