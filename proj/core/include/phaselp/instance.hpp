#pragma once

#include <Eigen/Dense>

namespace phaselp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One realization of the magnitude-only measurement model y = |A xi|.
///
/// The constructor computes the magnitudes from the sensing matrix and the
/// truth, so the two can never disagree. Truth and anchor must both have unit
/// Euclidean norm and positive inner product.
class ProblemInstance {
 public:
  /// Throws DimensionMismatch on inconsistent shapes and DomainError when the
  /// unit-norm or positive-correlation conditions fail.
  ProblemInstance(Matrix sensing, Vector truth, Vector anchor);

  const Matrix& sensing() const noexcept { return sensing_; }
  const Vector& magnitudes() const noexcept { return magnitudes_; }
  const Vector& truth() const noexcept { return truth_; }
  const Vector& anchor() const noexcept { return anchor_; }

  Eigen::Index rows() const noexcept { return sensing_.rows(); }
  Eigen::Index cols() const noexcept { return sensing_.cols(); }

 private:
  Matrix sensing_;
  Vector magnitudes_;
  Vector truth_;
  Vector anchor_;
};

/// min(|truth - x|^2, |truth + x|^2) / |truth|^2.
double nmse(const Vector& solution, const Vector& truth);

}  // namespace phaselp
