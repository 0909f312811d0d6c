#pragma once

#include <cstdint>
#include <random>

namespace regflood {

/// Mixes a base seed with a stream index (splitmix64 finalizer). Used to give
/// every chain, simulation and replicate its own generator so results do not
/// depend on how work is scheduled.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Seeded 64-bit generator with fixed-algorithm variates.
///
/// std:: distributions are implementation-defined, so uniform, normal and
/// Poisson variates are produced here from raw engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1).
  double uniform_open() noexcept;
  double normal() noexcept;
  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }
  /// Uniform integer on [0, n).
  std::uint64_t index(std::uint64_t n) noexcept;
  std::uint64_t poisson(double mean);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace regflood
