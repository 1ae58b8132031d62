#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "phaselp/errors.hpp"
#include "phaselp/solver.hpp"

namespace phaselp {
namespace {

// Coordinates closer than 1e-12 compare equal, so rounding noise in a solve
// cannot decide a tie.
bool lexicographically_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i) - 1e-12) return true;
    if (a(i) > b(i) + 1e-12) return false;
  }
  return false;
}

}  // namespace

Vector vertex_oracle(const ProblemInstance& instance, const Vector& anchor) {
  const Matrix& a = instance.sensing();
  const Vector& y = instance.magnitudes();
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (n > 3 || m > 12) {
    throw DomainError("vertex_oracle handles n <= 3 and m <= 12, got n=" + std::to_string(n) +
                      ", m=" + std::to_string(m));
  }
  if (anchor.size() != n) throw DimensionMismatch("vertex_oracle: anchor length");
  if (Eigen::FullPivLU<Matrix>(a).rank() < n) {
    throw Unbounded("sensing matrix is rank deficient; the polytope has no vertex");
  }

  const double tol = 1e-9 * std::max(1.0, y.maxCoeff());
  std::optional<Vector> best;
  double best_value = 0.0;

  // Walk every n-subset of rows and every sign pattern on it; rows cannot
  // appear twice since a_i^T x = y_i and a_i^T x = -y_i are parallel.
  std::vector<int> rows(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) rows[static_cast<std::size_t>(k)] = k;
  Matrix basis(n, n);
  Vector rhs(n);
  while (true) {
    for (int pattern = 0; pattern < (1 << n); ++pattern) {
      for (int k = 0; k < n; ++k) {
        const int i = rows[static_cast<std::size_t>(k)];
        const double sign = (pattern >> k) & 1 ? -1.0 : 1.0;
        basis.row(k) = a.row(i);
        rhs(k) = sign * y(i);
      }
      Eigen::FullPivLU<Matrix> lu(basis);
      if (!lu.isInvertible()) continue;
      const Vector x = lu.solve(rhs);
      if (((a * x).cwiseAbs() - y).maxCoeff() > tol) continue;
      const double value = anchor.dot(x);
      const bool better = !best || value > best_value + 1e-12;
      const bool tied = best && std::abs(value - best_value) <= 1e-12;
      if (better || (tied && lexicographically_less(x, *best))) {
        best_value = better ? value : std::max(best_value, value);
        best = x;
      }
    }

    // Next combination in lexicographic order.
    int k = n - 1;
    while (k >= 0 && rows[static_cast<std::size_t>(k)] == m - n + k) --k;
    if (k < 0) break;
    ++rows[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < n; ++j) {
      rows[static_cast<std::size_t>(j)] = rows[static_cast<std::size_t>(j - 1)] + 1;
    }
  }

  if (!best) throw Unbounded("no feasible vertex found");
  return *best;
}

}  // namespace phaselp
