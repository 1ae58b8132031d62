#pragma once

#include <cstdint>

namespace phaselp {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent key from (seed, index). Used for per-trial seeds and
/// for the sub-streams inside one instance.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Counter-based generator: the k-th draw is a pure function of (key, k), so
/// streams can be split and consumed in any order without coordination.
/// Normals use Box-Muller rather than std::normal_distribution so the values
/// are identical across standard libraries.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double normal() noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace phaselp
