#pragma once

#include <stdexcept>
#include <string>

namespace phaselp {

/// Argument outside the region where a formula or model is defined
/// (alpha <= 2, |s| > 1, r < 0, cosine outside (0, 1], ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A root search or scalar maximization failed to bracket or to converge
/// inside its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The LP objective vector is numerically zero.
class DegenerateAnchor : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Vertex enumeration found no feasible vertex, or a feasible direction along
/// which the objective grows without bound.
class Unbounded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vectors or matrices with inconsistent shapes.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace phaselp
