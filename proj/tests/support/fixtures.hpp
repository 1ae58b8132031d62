#pragma once

#include <cstdint>
#include <random>

#include "phaselp/instance.hpp"

namespace phaselp::testing {

/// Small Gaussian instance built with the standard library RNG, independent of
/// the harness generator. The anchor is truth plus noise, renormalized, and
/// flipped if needed to keep a positive correlation.
inline ProblemInstance random_instance(int m, int n, std::uint64_t seed, double noise = 1.0) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = normal(engine);
  }
  Vector truth(n);
  for (int j = 0; j < n; ++j) truth(j) = normal(engine);
  truth.normalize();
  Vector anchor(n);
  for (int j = 0; j < n; ++j) anchor(j) = truth(j) + noise * normal(engine);
  anchor.normalize();
  if (anchor.dot(truth) <= 0.0) anchor = -anchor;
  return ProblemInstance(std::move(a), std::move(truth), std::move(anchor));
}

}  // namespace phaselp::testing
