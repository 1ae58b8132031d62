#pragma once

#include <string_view>
#include <vector>

#include "phaselp/instance.hpp"

namespace phaselp {

enum class LpAlgorithm {
  /// Mehrotra predictor-corrector on the inequality form, started from the
  /// strictly feasible point x = 0, finished by a vertex polish.
  InteriorPoint,
  /// Matrix-free primal-dual splitting (Chambolle-Pock) with shrinkage on
  /// the dual. Slower; kept as an independent second route.
  PrimalDual,
};

std::string_view to_string(LpAlgorithm algorithm);
LpAlgorithm parse_lp_algorithm(std::string_view name);

struct SolverConfig {
  double eps_feasibility = 1e-8;  ///< relative to max(1, |y|_inf)
  double eps_gap = 1e-8;          ///< relative gap and relative dual residual
  int max_iterations = 50000;
  double step_ratio = 1.0;  ///< primal/dual step balance, PrimalDual only
  LpAlgorithm algorithm = LpAlgorithm::InteriorPoint;
  /// Snap an interior-point solution onto the vertex defined by its n most
  /// active constraints when that does not lose objective or feasibility.
  bool polish = true;

  /// Throws DomainError on non-positive tolerances or budgets.
  void validate() const;
};

/// Optimality certificate of a primal/dual pair for
///   max anchor^T x  s.t.  |A x| <= y
/// and its dual
///   min y^T |u|  s.t.  A^T u = anchor.
/// The signed dual u splits into mu = max(u, 0), lambda = max(-u, 0).
struct Certificate {
  double objective = 0.0;             ///< anchor^T x
  double dual_objective = 0.0;        ///< y^T |u|
  double feasibility_residual = 0.0;  ///< max_i (|a_i^T x| - y_i)_+ / max(1, |y|_inf)
  double gap = 0.0;                   ///< (y^T |u| - anchor^T x) / max(1, |anchor^T x|)
  double dual_residual = 0.0;         ///< |A^T u - anchor|_2 / max(1, |anchor|_2)
};

Certificate certify(const ProblemInstance& instance, const Vector& anchor, const Vector& x,
                    const Vector& dual);

struct SolverReport {
  Vector solution;
  Vector dual;  ///< signed multipliers, one per measurement
  double objective = 0.0;
  double feasibility_residual = 0.0;
  double gap = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool polished = false;
  LpAlgorithm algorithm = LpAlgorithm::InteriorPoint;
  int threads = 1;  ///< threads used for matrix-vector products
};

/// Solves the PhaseMax linear program anchored at instance.anchor().
///
/// Never throws for lack of convergence: a budget overrun comes back as a
/// report with converged == false. Throws DegenerateAnchor when the anchor is
/// numerically zero and DomainError on an invalid config.
SolverReport phasemax(const ProblemInstance& instance, const SolverConfig& config = {});

/// Same LP with the objective direction replaced by `anchor`. `warm_start`,
/// when given, seeds the primal iterate of the PrimalDual algorithm; the
/// interior-point path always starts from the origin.
SolverReport phasemax(const ProblemInstance& instance, const Vector& anchor,
                      const SolverConfig& config = {}, const Vector* warm_start = nullptr);

/// Spectral norm estimate from a fixed number of power iterations on A^T A.
double estimate_spectral_norm(const Matrix& a, int iterations = 50);

struct LampConfig {
  int max_outer = 20;
  double tol = 1e-4;

  void validate() const;
};

struct LampStep {
  int outer = 0;            ///< k + 1 for the solve producing x_{k+1}
  double norm = 0.0;        ///< |x_{k+1}|_2
  double step_norm = 0.0;   ///< |x_{k+1} - x_k|_2
  double nmse = 0.0;        ///< against instance.truth()
  int inner_iterations = 0;
  bool inner_converged = false;
  bool warm_started = false;
};

struct LampResult {
  SolverReport report;  ///< report of the last inner solve
  std::vector<LampStep> trajectory;
  bool reached_tolerance = false;
  /// Largest drop |x_k|^2 - |x_{k+1}|^2 over consecutive solves, 0 when the
  /// objective never decreased.
  double max_norm_sq_decrease = 0.0;
};

/// Successive linearization of max |x|^2 over the PhaseMax polytope: each
/// outer step re-solves PhaseMax with the previous solution as anchor,
/// starting from instance.anchor().
LampResult phaselamp(const ProblemInstance& instance, const LampConfig& lamp = {},
                     const SolverConfig& inner = {});

/// Exact LP optimum for tiny instances (n <= 3, m <= 12) by enumerating all
/// vertices of the polytope. Ties within 1e-12 in objective go to the
/// lexicographically smallest vertex.
///
/// Throws DomainError outside the size limits and Unbounded when the
/// polytope has no vertex (rank-deficient sensing matrix).
Vector vertex_oracle(const ProblemInstance& instance, const Vector& anchor);

}  // namespace phaselp
