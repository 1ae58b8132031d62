#include <algorithm>

#include "phaselp/errors.hpp"
#include "phaselp/solver.hpp"

namespace phaselp {

void LampConfig::validate() const {
  if (max_outer < 1) throw DomainError("max_outer must be >= 1");
  if (!(tol > 0.0)) throw DomainError("lamp tolerance must be > 0");
}

LampResult phaselamp(const ProblemInstance& instance, const LampConfig& lamp,
                     const SolverConfig& inner) {
  lamp.validate();
  inner.validate();

  LampResult result;
  Vector current = instance.anchor();
  bool have_solution = false;
  double previous_norm_sq = 0.0;

  for (int k = 0; k < lamp.max_outer; ++k) {
    // The first step is plain PhaseMax; later steps warm-start from x_k.
    const Vector* warm = have_solution ? &current : nullptr;
    SolverReport report = phasemax(instance, current, inner, warm);

    LampStep step;
    step.outer = k + 1;
    step.norm = report.solution.norm();
    step.step_norm = (report.solution - current).norm();
    step.nmse = nmse(report.solution, instance.truth());
    step.inner_iterations = report.iterations;
    step.inner_converged = report.converged;
    step.warm_started = warm != nullptr && inner.algorithm == LpAlgorithm::PrimalDual;
    result.trajectory.push_back(step);

    const double norm_sq = report.solution.squaredNorm();
    if (have_solution) {
      result.max_norm_sq_decrease = std::max(result.max_norm_sq_decrease, previous_norm_sq - norm_sq);
    }
    previous_norm_sq = norm_sq;

    current = report.solution;
    have_solution = true;
    result.report = std::move(report);
    if (step.step_norm <= lamp.tol) {
      result.reached_tolerance = true;
      break;
    }
    if (!(current.norm() > 1e-14)) break;  // next anchor would be degenerate
  }
  return result;
}

}  // namespace phaselp
