#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "phaselp/instance.hpp"
#include "phaselp/solver.hpp"

namespace phaselp {

enum class Method { PhaseMax, PhaseLamp };

std::string_view to_string(Method method);
/// Accepts "phasemax" and "phaselamp" (case-insensitive).
Method parse_method(std::string_view name);

/// Parameters of the Gaussian measurement model.
struct ModelParams {
  int n = 200;
  double alpha = 5.0;  ///< m = round(alpha * n)
  double rho_init = 0.5;
  std::uint64_t seed = 0;

  int m() const;
  /// Throws DomainError unless n >= 2, alpha > 2, rho_init in (0, 1] and m > n.
  void validate() const;
};

struct InstanceDraw {
  ProblemInstance instance;
  /// Number of orthogonal directions drawn before one was usable (>= 1).
  int anchor_attempts = 1;
};

/// Draws A with i.i.d. standard normal entries, xi uniform on the sphere, and
/// anchor = rho xi + sqrt(1 - rho^2) w with w uniform on the unit sphere
/// orthogonal to xi. Every value is a function of params.seed alone.
InstanceDraw draw_instance(const ModelParams& params);
ProblemInstance generate_instance(const ModelParams& params);

/// Seed of trial `index` in a cell seeded with `seed`.
std::uint64_t trial_seed(std::uint64_t seed, int index);

struct CellOptions {
  int trials = 10;
  double success_threshold = 1e-5;
  SolverConfig solver;
  LampConfig lamp;
  /// Worker threads for independent trials; results never depend on it.
  int workers = 1;
};

struct SweepRecord {
  ModelParams params;
  Method method = Method::PhaseMax;
  int m = 0;
  std::vector<double> trial_nmse;
  std::vector<std::uint64_t> trial_seeds;
  double median_nmse = 0.0;
  double mean_nmse = 0.0;
  double success_rate = 0.0;
  double theory_nmse = 0.0;
  double rho_c = 0.0;
  double rho_s = 0.0;
  std::chrono::duration<double> wall_time{0.0};

  /// Trials whose (last) inner LP did not meet its certificate tolerances.
  int unconverged_trials = 0;
  /// Trials that threw; their NMSE is recorded as NaN.
  int failed_trials = 0;
  std::vector<std::string> failures;
  /// PhaseLamp only: worst |x_k|^2 - |x_{k+1}|^2 across all trials.
  double max_norm_sq_decrease = 0.0;
  /// PhaseLamp only: mean number of outer iterations.
  double mean_outer_iterations = 0.0;
};

/// Median, mean and success rate recomputed from trial NMSEs. NaN entries
/// (failed trials) count as failures and are left out of median and mean.
struct NmseSummary {
  double median = 0.0;
  double mean = 0.0;
  double success_rate = 0.0;
};
NmseSummary summarize(const std::vector<double>& trial_nmse, double success_threshold);

/// Runs `options.trials` independent instances; never throws for solver
/// trouble inside a trial, which is logged into the record instead.
SweepRecord run_cell(const ModelParams& params, Method method, const CellOptions& options);

struct SweepGrid {
  std::vector<double> alphas;
  std::vector<double> rhos;
  std::vector<Method> methods{Method::PhaseMax};
  int n = 200;
  std::uint64_t seed = 0;

  /// Cells in output order: alpha outermost, then rho, then method.
  std::vector<std::pair<ModelParams, Method>> cells() const;
};

/// One record per grid cell in SweepGrid::cells() order. All trials of all
/// cells share one worker pool; records are gathered by index.
std::vector<SweepRecord> run_sweep(const SweepGrid& grid, const CellOptions& options);

}  // namespace phaselp
