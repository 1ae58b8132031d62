#include "phaselp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <string>
#include <thread>

#include "phaselp/errors.hpp"
#include "phaselp/random.hpp"
#include "phaselp/theory.hpp"

namespace phaselp {
namespace {

constexpr int kMaxAnchorAttempts = 64;

Vector normal_vector(std::uint64_t key, Eigen::Index n) {
  CounterRng rng(key);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

struct TrialResult {
  double nmse = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::string error;
  double norm_sq_decrease = 0.0;
  int outer_iterations = 0;
  double seconds = 0.0;
};

TrialResult run_trial(const ModelParams& params, Method method, const CellOptions& options) {
  TrialResult out;
  const auto start = std::chrono::steady_clock::now();
  try {
    const ProblemInstance instance = generate_instance(params);
    if (method == Method::PhaseMax) {
      const SolverReport report = phasemax(instance, options.solver);
      out.nmse = nmse(report.solution, instance.truth());
      out.converged = report.converged;
      out.outer_iterations = 1;
    } else {
      const LampResult lamp = phaselamp(instance, options.lamp, options.solver);
      out.nmse = nmse(lamp.report.solution, instance.truth());
      out.converged = std::all_of(lamp.trajectory.begin(), lamp.trajectory.end(),
                                  [](const LampStep& s) { return s.inner_converged; });
      out.norm_sq_decrease = lamp.max_norm_sq_decrease;
      out.outer_iterations = static_cast<int>(lamp.trajectory.size());
    }
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// Runs job(i) for i in [0, count) on up to `workers` threads. Each job writes
// only its own output slot, so the results do not depend on scheduling.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& job) {
  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) job(i);
    });
  }
  for (auto& thread : pool) thread.join();
}

SweepRecord assemble(const ModelParams& params, Method method, const CellOptions& options,
                     const std::vector<TrialResult>& trials) {
  SweepRecord record;
  record.params = params;
  record.method = method;
  record.m = params.m();
  double seconds = 0.0;
  double outer = 0.0;
  for (int t = 0; t < static_cast<int>(trials.size()); ++t) {
    const TrialResult& r = trials[static_cast<std::size_t>(t)];
    record.trial_nmse.push_back(r.nmse);
    record.trial_seeds.push_back(trial_seed(params.seed, t));
    seconds += r.seconds;
    outer += r.outer_iterations;
    if (!r.error.empty()) {
      ++record.failed_trials;
      record.failures.push_back("trial " + std::to_string(t) + ": " + r.error);
    } else if (!r.converged) {
      ++record.unconverged_trials;
      record.failures.push_back("trial " + std::to_string(t) + ": LP did not converge");
    }
    record.max_norm_sq_decrease = std::max(record.max_norm_sq_decrease, r.norm_sq_decrease);
  }
  record.wall_time = std::chrono::duration<double>(seconds);
  if (method == Method::PhaseLamp && !trials.empty()) {
    record.mean_outer_iterations = outer / static_cast<double>(trials.size());
  }

  const NmseSummary summary = summarize(record.trial_nmse, options.success_threshold);
  record.median_nmse = summary.median;
  record.mean_nmse = summary.mean;
  record.success_rate = summary.success_rate;

  const theory::Alpha alpha(params.alpha);
  record.theory_nmse = theory::spo_solve(theory::CosineSimilarity(params.rho_init), alpha).nmse;
  record.rho_c = theory::rho_critical(alpha);
  record.rho_s = theory::lamp_certificate(alpha).rho_s;
  return record;
}

void validate_options(const CellOptions& options) {
  if (options.trials < 1) throw DomainError("trials must be >= 1");
  if (!(options.success_threshold > 0.0)) throw DomainError("success threshold must be > 0");
  options.solver.validate();
  options.lamp.validate();
}

}  // namespace

std::string_view to_string(Method method) {
  return method == Method::PhaseMax ? "phasemax" : "phaselamp";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "phasemax") return Method::PhaseMax;
  if (lower == "phaselamp") return Method::PhaseLamp;
  throw DomainError("unknown method '" + std::string(name) + "' (expected phasemax or phaselamp)");
}

int ModelParams::m() const { return static_cast<int>(std::lround(alpha * n)); }

void ModelParams::validate() const {
  if (n < 2) throw DomainError("n must be >= 2, got " + std::to_string(n));
  if (!std::isfinite(alpha) || !(alpha > 2.0)) {
    throw DomainError("alpha must be > 2, got " + std::to_string(alpha));
  }
  if (!(rho_init > 0.0 && rho_init <= 1.0)) {
    throw DomainError("rho_init must lie in (0, 1], got " + std::to_string(rho_init));
  }
  if (m() <= n) throw DomainError("m = round(alpha n) must exceed n");
}

InstanceDraw draw_instance(const ModelParams& params) {
  params.validate();
  const int n = params.n;
  const int m = params.m();

  Matrix sensing(m, n);
  {
    CounterRng rng(derive_seed(params.seed, 0));
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) sensing(i, j) = rng.normal();
    }
  }
  Vector truth = normal_vector(derive_seed(params.seed, 1), n);
  truth.normalize();

  Vector direction;
  int attempts = 0;
  while (true) {
    ++attempts;
    if (attempts > kMaxAnchorAttempts) {
      throw ConvergenceError("could not draw a direction orthogonal to the truth");
    }
    Vector w = normal_vector(derive_seed(params.seed, 1 + static_cast<std::uint64_t>(attempts)), n);
    const double raw = w.norm();
    w -= w.dot(truth) * truth;
    if (!(w.norm() > 1e-8 * raw)) continue;  // numerically parallel to the truth
    w -= w.dot(truth) * truth;
    direction = w.normalized();
    break;
  }

  const double rho = params.rho_init;
  Vector anchor = rho * truth + std::sqrt((1.0 - rho) * (1.0 + rho)) * direction;
  return InstanceDraw{ProblemInstance(std::move(sensing), std::move(truth), std::move(anchor)),
                      attempts};
}

ProblemInstance generate_instance(const ModelParams& params) {
  return draw_instance(params).instance;
}

std::uint64_t trial_seed(std::uint64_t seed, int index) {
  return derive_seed(seed, 0x747269616cULL + static_cast<std::uint64_t>(index));
}

NmseSummary summarize(const std::vector<double>& trial_nmse, double success_threshold) {
  NmseSummary out;
  std::vector<double> finite;
  int successes = 0;
  for (double v : trial_nmse) {
    if (!std::isfinite(v)) continue;
    finite.push_back(v);
    if (v < success_threshold) ++successes;
  }
  if (trial_nmse.empty()) return out;
  out.success_rate = static_cast<double>(successes) / static_cast<double>(trial_nmse.size());
  if (finite.empty()) {
    out.median = out.mean = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  std::sort(finite.begin(), finite.end());
  const std::size_t k = finite.size();
  out.median = k % 2 == 1 ? finite[k / 2] : 0.5 * (finite[k / 2 - 1] + finite[k / 2]);
  double sum = 0.0;
  for (double v : finite) sum += v;
  out.mean = sum / static_cast<double>(k);
  return out;
}

SweepRecord run_cell(const ModelParams& params, Method method, const CellOptions& options) {
  params.validate();
  validate_options(options);
  std::vector<TrialResult> trials(static_cast<std::size_t>(options.trials));
  parallel_for(trials.size(), options.workers, [&](std::size_t t) {
    ModelParams trial = params;
    trial.seed = trial_seed(params.seed, static_cast<int>(t));
    trials[t] = run_trial(trial, method, options);
  });
  return assemble(params, method, options, trials);
}

std::vector<std::pair<ModelParams, Method>> SweepGrid::cells() const {
  std::vector<std::pair<ModelParams, Method>> out;
  for (double alpha : alphas) {
    for (double rho : rhos) {
      for (Method method : methods) {
        out.emplace_back(ModelParams{n, alpha, rho, seed}, method);
      }
    }
  }
  return out;
}

std::vector<SweepRecord> run_sweep(const SweepGrid& grid, const CellOptions& options) {
  const auto cells = grid.cells();
  if (cells.empty()) throw DomainError("sweep grid is empty");
  validate_options(options);
  for (const auto& [params, method] : cells) params.validate();

  const std::size_t per_cell = static_cast<std::size_t>(options.trials);
  std::vector<TrialResult> results(cells.size() * per_cell);
  parallel_for(results.size(), options.workers, [&](std::size_t job) {
    const auto& [params, method] = cells[job / per_cell];
    ModelParams trial = params;
    trial.seed = trial_seed(params.seed, static_cast<int>(job % per_cell));
    results[job] = run_trial(trial, method, options);
  });

  std::vector<SweepRecord> records;
  records.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto first = results.begin() + static_cast<std::ptrdiff_t>(c * per_cell);
    std::vector<TrialResult> slice(first, first + static_cast<std::ptrdiff_t>(per_cell));
    records.push_back(assemble(cells[c].first, cells[c].second, options, slice));
  }
  return records;
}

}  // namespace phaselp
