#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "phaselp/harness.hpp"
#include "phaselp/solver.hpp"

namespace phaselp::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNotConverged = 2;

std::string_view version();

/// Everything a command needs; serialized verbatim into the manifest so a
/// replay rebuilds the same run.
struct RunSpec {
  std::string command;  ///< theory | solve | sweep
  std::vector<double> alphas;
  std::vector<double> rhos;
  std::vector<Method> methods{Method::PhaseMax};
  int n = 200;
  int trials = 10;
  std::uint64_t seed = 0;
  double success_threshold = 1e-5;
  SolverConfig solver;
  LampConfig lamp;
  std::string out;  ///< empty writes to stdout without a manifest
};

Json to_json(const RunSpec& spec);

/// Overlays the keys present in `config` onto `spec`. Each key that was also
/// set on the command line (listed in `from_flags`) produces a warning line.
/// Grids accept a number, an array, or {"from", "to", "count"}.
void apply_config(const Json& config, RunSpec& spec, const std::vector<std::string>& from_flags,
                  std::ostream& warnings);

/// 12 significant digits, shortest form, independent of the locale.
std::string format_number(double value);

/// PHASE_WORKERS when set to a positive integer, else the hardware thread
/// count.
int workers_from_env();

std::filesystem::path manifest_path(const std::string& out);
std::filesystem::path failures_path(const std::string& out);

/// Grid and options a sweep RunSpec stands for; throws DomainError on
/// invalid values. Workers come from PHASE_WORKERS.
SweepGrid sweep_grid(const RunSpec& spec);
CellOptions cell_options(const RunSpec& spec);
/// Sweep CSV payload, header included.
std::string sweep_csv(const std::vector<SweepRecord>& records);

/// Command bodies. Output goes to spec.out (plus manifest) or to `out` when
/// spec.out is empty; diagnostics go to `err`. Return the process exit code.
int cmd_theory(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_solve(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunSpec& spec, std::ostream& out, std::ostream& err);
/// Re-runs the command recorded in a manifest; `out_override` redirects the
/// artifact.
int cmd_replay(const std::filesystem::path& manifest, const std::string& out_override,
               std::ostream& out, std::ostream& err);

int dispatch(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// Full command line entry point (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phaselp::cli
