#include "phaselp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "phaselp/errors.hpp"

namespace phaselp {
namespace {

constexpr double kNormTolerance = 1e-10;

}  // namespace

ProblemInstance::ProblemInstance(Matrix sensing, Vector truth, Vector anchor)
    : sensing_(std::move(sensing)), truth_(std::move(truth)), anchor_(std::move(anchor)) {
  if (sensing_.rows() < 1 || sensing_.cols() < 1) {
    throw DimensionMismatch("sensing matrix must be non-empty");
  }
  if (truth_.size() != sensing_.cols() || anchor_.size() != sensing_.cols()) {
    throw DimensionMismatch("truth and anchor must have length n = " +
                            std::to_string(sensing_.cols()));
  }
  if (!sensing_.allFinite() || !truth_.allFinite() || !anchor_.allFinite()) {
    throw DomainError("instance contains non-finite entries");
  }
  if (std::abs(truth_.norm() - 1.0) > kNormTolerance) {
    throw DomainError("truth must have unit norm, got " + std::to_string(truth_.norm()));
  }
  if (std::abs(anchor_.norm() - 1.0) > kNormTolerance) {
    throw DomainError("anchor must have unit norm, got " + std::to_string(anchor_.norm()));
  }
  if (!(anchor_.dot(truth_) > 0.0)) {
    throw DomainError("anchor must be positively correlated with the truth");
  }
  magnitudes_ = (sensing_ * truth_).cwiseAbs();
}

double nmse(const Vector& solution, const Vector& truth) {
  if (solution.size() != truth.size()) {
    throw DimensionMismatch("nmse: solution has length " + std::to_string(solution.size()) +
                            ", truth has length " + std::to_string(truth.size()));
  }
  const double scale = truth.squaredNorm();
  if (!(scale > 0.0)) {
    throw DomainError("nmse: truth must be nonzero");
  }
  const double minus = (truth - solution).squaredNorm();
  const double plus = (truth + solution).squaredNorm();
  return std::min(minus, plus) / scale;
}

}  // namespace phaselp
