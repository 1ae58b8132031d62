#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "phaselp/errors.hpp"
#include "phaselp/theory.hpp"

#ifndef PHASELP_VERSION
#define PHASELP_VERSION "0.0.0"
#endif

namespace phaselp::cli {

namespace fs = std::filesystem;

std::string_view version() { return PHASELP_VERSION; }

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

int workers_from_env() {
  if (const char* env = std::getenv("PHASE_WORKERS")) {
    int value = 0;
    const std::string_view text(env);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec == std::errc() && res.ptr == text.data() + text.size() && value > 0) return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

fs::path manifest_path(const std::string& out) { return fs::path(out + ".manifest.json"); }
fs::path failures_path(const std::string& out) { return fs::path(out + ".failures.log"); }

namespace {

Json methods_json(const std::vector<Method>& methods) {
  Json arr = Json::array();
  for (Method m : methods) arr.push_back(std::string(to_string(m)));
  return arr;
}

std::vector<double> grid_from_json(const Json& value, const std::string& key) {
  if (value.is_number()) return {value.get<double>()};
  if (value.is_array()) {
    std::vector<double> out;
    for (const auto& v : value) {
      if (!v.is_number()) throw DomainError("config key '" + key + "' must hold numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  if (value.is_object()) {
    const double from = value.at("from").get<double>();
    const double to = value.at("to").get<double>();
    const int count = value.at("count").get<int>();
    if (count < 1) throw DomainError("config key '" + key + "': count must be >= 1");
    std::vector<double> out;
    for (int k = 0; k < count; ++k) {
      out.push_back(count == 1 ? from : from + (to - from) * k / (count - 1));
    }
    return out;
  }
  throw DomainError("config key '" + key + "' must be a number, array or {from, to, count}");
}

std::vector<Method> methods_from_json(const Json& value) {
  std::vector<Method> out;
  if (value.is_string()) {
    out.push_back(parse_method(value.get<std::string>()));
  } else if (value.is_array()) {
    for (const auto& v : value) out.push_back(parse_method(v.get<std::string>()));
  } else {
    throw DomainError("config key 'method' must be a string or an array of strings");
  }
  return out;
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DomainError("cannot open '" + path.string() + "' for writing");
  file << content;
  if (!file) throw DomainError("write to '" + path.string() + "' failed");
}

void write_manifest(const RunSpec& spec, const std::vector<std::string>& artifacts, int workers) {
  Json manifest;
  manifest["command"] = spec.command;
  manifest["version"] = std::string(version());
  manifest["seed"] = spec.seed;
  manifest["params"] = to_json(spec);
  manifest["artifacts"] = artifacts;
  manifest["workers"] = workers;
  manifest["timestamp"] = timestamp_utc();
  write_file(manifest_path(spec.out), manifest.dump(2) + "\n");
}

/// Sends `content` to spec.out with its manifest, or to `out` when no path is
/// set.
void emit(const RunSpec& spec, const std::string& content, std::ostream& out,
          std::vector<std::string> extra_artifacts = {}, int workers = 1) {
  if (spec.out.empty()) {
    out << content;
    return;
  }
  write_file(spec.out, content);
  std::vector<std::string> artifacts{spec.out};
  artifacts.insert(artifacts.end(), extra_artifacts.begin(), extra_artifacts.end());
  write_manifest(spec, artifacts, workers);
}

void validate_configs(const RunSpec& spec) {
  spec.solver.validate();
  spec.lamp.validate();
  if (spec.trials < 1) throw DomainError("trials must be >= 1");
  if (!(spec.success_threshold > 0.0)) throw DomainError("success_threshold must be > 0");
}

}  // namespace

Json to_json(const RunSpec& spec) {
  Json j;
  j["command"] = spec.command;
  j["alpha"] = spec.alphas;
  j["rho"] = spec.rhos;
  j["method"] = methods_json(spec.methods);
  j["n"] = spec.n;
  j["trials"] = spec.trials;
  j["seed"] = spec.seed;
  j["success_threshold"] = spec.success_threshold;
  j["eps_feas"] = spec.solver.eps_feasibility;
  j["eps_gap"] = spec.solver.eps_gap;
  j["max_iter"] = spec.solver.max_iterations;
  j["step_ratio"] = spec.solver.step_ratio;
  j["lp"] = std::string(to_string(spec.solver.algorithm));
  j["polish"] = spec.solver.polish;
  j["imax"] = spec.lamp.max_outer;
  j["lamp_tol"] = spec.lamp.tol;
  j["out"] = spec.out;
  return j;
}

void apply_config(const Json& config, RunSpec& spec, const std::vector<std::string>& from_flags,
                  std::ostream& warnings) {
  if (!config.is_object()) throw DomainError("config must be a JSON object");
  for (const auto& [key, value] : config.items()) {
    if (std::find(from_flags.begin(), from_flags.end(), key) != from_flags.end()) {
      warnings << "warning: config file overrides flag for '" << key << "'\n";
    }
    if (key == "command") {
      continue;
    } else if (key == "alpha") {
      spec.alphas = grid_from_json(value, key);
    } else if (key == "rho") {
      spec.rhos = grid_from_json(value, key);
    } else if (key == "method") {
      spec.methods = methods_from_json(value);
    } else if (key == "n") {
      spec.n = value.get<int>();
    } else if (key == "trials") {
      spec.trials = value.get<int>();
    } else if (key == "seed") {
      spec.seed = value.get<std::uint64_t>();
    } else if (key == "success_threshold") {
      spec.success_threshold = value.get<double>();
    } else if (key == "eps_feas") {
      spec.solver.eps_feasibility = value.get<double>();
    } else if (key == "eps_gap") {
      spec.solver.eps_gap = value.get<double>();
    } else if (key == "max_iter") {
      spec.solver.max_iterations = value.get<int>();
    } else if (key == "step_ratio") {
      spec.solver.step_ratio = value.get<double>();
    } else if (key == "lp") {
      spec.solver.algorithm = parse_lp_algorithm(value.get<std::string>());
    } else if (key == "polish") {
      spec.solver.polish = value.get<bool>();
    } else if (key == "imax") {
      spec.lamp.max_outer = value.get<int>();
    } else if (key == "lamp_tol") {
      spec.lamp.tol = value.get<double>();
    } else if (key == "out") {
      spec.out = value.get<std::string>();
    } else if (key == "description") {
      continue;
    } else {
      throw DomainError("unknown config key '" + key + "'");
    }
  }
}

int cmd_theory(const RunSpec& spec, std::ostream& out, std::ostream&) {
  if (spec.alphas.empty() || spec.rhos.empty()) throw DomainError("theory needs --alpha and --rho");
  std::ostringstream csv;
  csv << "alpha,rho_init,s_star,r_star,nmse_theory,rho_c,theta_star,s_hat,ell,rho_s\n";
  for (double a : spec.alphas) {
    const theory::Alpha alpha(a);
    const double rho_c = theory::rho_critical(alpha);
    const theory::LampCertificate cert = theory::lamp_certificate(alpha);
    for (double r : spec.rhos) {
      const theory::TheoryPrediction p = theory::spo_solve(theory::CosineSimilarity(r), alpha);
      csv << format_number(a) << ',' << format_number(r) << ',' << format_number(p.s_star) << ','
          << format_number(p.r_star) << ',' << format_number(p.nmse) << ','
          << format_number(rho_c) << ',' << format_number(cert.theta_star) << ','
          << format_number(cert.s_hat) << ',' << format_number(cert.ell) << ','
          << format_number(cert.rho_s) << '\n';
    }
  }
  emit(spec, csv.str(), out);
  return kExitOk;
}

int cmd_solve(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.alphas.size() != 1 || spec.rhos.size() != 1 || spec.methods.size() != 1) {
    throw DomainError("solve takes exactly one --alpha, one --rho and one --method");
  }
  validate_configs(spec);
  const ModelParams params{spec.n, spec.alphas[0], spec.rhos[0], spec.seed};
  params.validate();
  const Method method = spec.methods[0];
  const ProblemInstance instance = generate_instance(params);

  SolverReport report;
  LampResult lamp;
  bool converged = false;
  if (method == Method::PhaseMax) {
    report = phasemax(instance, spec.solver);
    converged = report.converged;
  } else {
    lamp = phaselamp(instance, spec.lamp, spec.solver);
    report = lamp.report;
    converged = std::all_of(lamp.trajectory.begin(), lamp.trajectory.end(),
                            [](const LampStep& s) { return s.inner_converged; });
  }
  const double error = nmse(report.solution, instance.truth());

  const theory::Alpha alpha(params.alpha);
  const theory::TheoryPrediction pred =
      theory::spo_solve(theory::CosineSimilarity(params.rho_init), alpha);
  const theory::LampCertificate cert = theory::lamp_certificate(alpha);

  Json j;
  j["command"] = "solve";
  j["method"] = std::string(to_string(method));
  j["params"] = {{"n", params.n},
                 {"m", params.m()},
                 {"alpha", params.alpha},
                 {"rho_init", params.rho_init},
                 {"seed", params.seed}};
  j["report"] = {{"algorithm", std::string(to_string(report.algorithm))},
                 {"objective", report.objective},
                 {"feasibility_residual", report.feasibility_residual},
                 {"gap", report.gap},
                 {"dual_residual", report.dual_residual},
                 {"iterations", report.iterations},
                 {"converged", converged},
                 {"polished", report.polished}};
  j["nmse"] = error;
  j["success"] = error < spec.success_threshold;
  j["theory"] = {{"s_star", pred.s_star},         {"r_star", pred.r_star},
                 {"nmse", pred.nmse},             {"rho_c", pred.rho_c},
                 {"theta_star", cert.theta_star}, {"s_hat", cert.s_hat},
                 {"ell", cert.ell},               {"rho_s", cert.rho_s}};
  if (method == Method::PhaseLamp) {
    Json steps = Json::array();
    for (const LampStep& s : lamp.trajectory) {
      steps.push_back({{"outer", s.outer},
                       {"norm", s.norm},
                       {"step_norm", s.step_norm},
                       {"nmse", s.nmse},
                       {"inner_iterations", s.inner_iterations},
                       {"inner_converged", s.inner_converged},
                       {"warm_started", s.warm_started}});
    }
    j["lamp"] = {{"reached_tolerance", lamp.reached_tolerance},
                 {"max_norm_sq_decrease", lamp.max_norm_sq_decrease},
                 {"trajectory", steps}};
  }
  j["solution"] = std::vector<double>(report.solution.data(),
                                      report.solution.data() + report.solution.size());

  emit(spec, j.dump(2) + "\n", out);
  if (!converged) {
    err << "error: LP did not reach its certificate tolerances\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

SweepGrid sweep_grid(const RunSpec& spec) {
  SweepGrid grid;
  grid.alphas = spec.alphas;
  grid.rhos = spec.rhos;
  grid.methods = spec.methods;
  grid.n = spec.n;
  grid.seed = spec.seed;
  for (const auto& cell : grid.cells()) cell.first.validate();
  return grid;
}

CellOptions cell_options(const RunSpec& spec) {
  validate_configs(spec);
  CellOptions options;
  options.trials = spec.trials;
  options.success_threshold = spec.success_threshold;
  options.solver = spec.solver;
  options.lamp = spec.lamp;
  options.workers = workers_from_env();
  return options;
}

std::string sweep_csv(const std::vector<SweepRecord>& records) {
  std::ostringstream csv;
  csv << "alpha,rho_init,n,trials,method,median_nmse,mean_nmse,success_rate,theory_nmse,rho_c,"
         "rho_s,seed\n";
  for (const SweepRecord& r : records) {
    csv << format_number(r.params.alpha) << ',' << format_number(r.params.rho_init) << ','
        << r.params.n << ',' << r.trial_nmse.size() << ',' << to_string(r.method) << ','
        << format_number(r.median_nmse) << ',' << format_number(r.mean_nmse) << ','
        << format_number(r.success_rate) << ',' << format_number(r.theory_nmse) << ','
        << format_number(r.rho_c) << ',' << format_number(r.rho_s) << ',' << r.params.seed
        << '\n';
  }
  return csv.str();
}

int cmd_sweep(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.alphas.empty() || spec.rhos.empty() || spec.methods.empty()) {
    err << "error: empty grid\n";
    return kExitUsage;
  }
  const CellOptions options = cell_options(spec);
  const std::vector<SweepRecord> records = run_sweep(sweep_grid(spec), options);

  std::ostringstream failures;
  bool any_failure = false;
  int succeeded_cells = 0;
  for (const SweepRecord& r : records) {
    if (r.failed_trials < static_cast<int>(r.trial_nmse.size())) ++succeeded_cells;
    for (const std::string& f : r.failures) {
      any_failure = true;
      failures << "alpha=" << format_number(r.params.alpha)
               << " rho_init=" << format_number(r.params.rho_init) << " method=" << to_string(r.method)
               << " " << f << '\n';
    }
  }

  std::vector<std::string> extra;
  if (!spec.out.empty()) {
    const fs::path sidecar = failures_path(spec.out);
    if (any_failure) {
      write_file(sidecar, failures.str());
      extra.push_back(sidecar.string());
    } else if (fs::exists(sidecar)) {
      fs::remove(sidecar);
    }
  } else if (any_failure) {
    err << failures.str();
  }
  emit(spec, sweep_csv(records), out, extra, options.workers);

  if (succeeded_cells == 0) {
    err << "error: every cell failed\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int dispatch(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.command == "theory") return cmd_theory(spec, out, err);
  if (spec.command == "solve") return cmd_solve(spec, out, err);
  if (spec.command == "sweep") return cmd_sweep(spec, out, err);
  throw DomainError("unknown command '" + spec.command + "'");
}

int cmd_replay(const fs::path& manifest, const std::string& out_override, std::ostream& out,
               std::ostream& err) {
  std::ifstream file(manifest);
  if (!file) throw DomainError("cannot read manifest '" + manifest.string() + "'");
  const Json j = Json::parse(file);
  RunSpec spec;
  spec.command = j.at("command").get<std::string>();
  apply_config(j.at("params"), spec, {}, err);
  if (!out_override.empty()) spec.out = out_override;
  return dispatch(spec, out, err);
}

namespace {

struct Flags {
  std::vector<double> alphas;
  std::vector<double> rhos;
  std::vector<std::string> methods;
  int n = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  double eps_feas = 0.0;
  double eps_gap = 0.0;
  int max_iter = 0;
  int imax = 0;
  double lamp_tol = 0.0;
  std::string lp;
  double success_threshold = 0.0;
};

/// Option name in the config file for each flag that can carry a value.
struct Bound {
  CLI::Option* option;
  std::string key;
};

std::vector<Bound> add_run_flags(CLI::App* app, Flags& f) {
  std::vector<Bound> bound;
  bound.push_back({app->add_option("--alpha", f.alphas, "Sampling ratio m/n (comma list)")
                       ->delimiter(','),
                   "alpha"});
  bound.push_back(
      {app->add_option("--rho", f.rhos, "Anchor cosine similarity (comma list)")->delimiter(','),
       "rho"});
  bound.push_back({app->add_option("--method", f.methods, "phasemax|phaselamp (comma list)")
                       ->delimiter(','),
                   "method"});
  bound.push_back({app->add_option("--n", f.n, "Signal dimension"), "n"});
  bound.push_back({app->add_option("--trials", f.trials, "Trials per cell"), "trials"});
  bound.push_back({app->add_option("--seed", f.seed, "Base seed"), "seed"});
  bound.push_back({app->add_option("--out", f.out, "Output path (stdout when omitted)"), "out"});
  bound.push_back({app->add_option("--eps-feas", f.eps_feas, "LP feasibility tolerance"),
                   "eps_feas"});
  bound.push_back({app->add_option("--eps-gap", f.eps_gap, "LP gap tolerance"), "eps_gap"});
  bound.push_back({app->add_option("--max-iter", f.max_iter, "LP iteration budget"), "max_iter"});
  bound.push_back({app->add_option("--imax", f.imax, "PhaseLamp outer iterations"), "imax"});
  bound.push_back({app->add_option("--lamp-tol", f.lamp_tol, "PhaseLamp step tolerance"),
                   "lamp_tol"});
  bound.push_back({app->add_option("--lp", f.lp, "LP algorithm: ipm|pdhg"), "lp"});
  bound.push_back({app->add_option("--success", f.success_threshold, "NMSE success threshold"),
                   "success_threshold"});
  app->add_option("--config", f.config, "JSON config file; its keys win over flags");
  return bound;
}

RunSpec build_spec(const std::string& command, const Flags& f, const std::vector<Bound>& bound,
                   std::ostream& err) {
  RunSpec spec;
  spec.command = command;
  std::vector<std::string> set;
  for (const Bound& b : bound) {
    if (b.option->count() > 0) set.push_back(b.key);
  }
  const auto given = [&](const char* key) {
    return std::find(set.begin(), set.end(), key) != set.end();
  };
  if (given("alpha")) spec.alphas = f.alphas;
  if (given("rho")) spec.rhos = f.rhos;
  if (given("method")) {
    spec.methods.clear();
    for (const auto& m : f.methods) spec.methods.push_back(parse_method(m));
  }
  if (given("n")) spec.n = f.n;
  if (given("trials")) spec.trials = f.trials;
  if (given("seed")) spec.seed = f.seed;
  if (given("out")) spec.out = f.out;
  if (given("eps_feas")) spec.solver.eps_feasibility = f.eps_feas;
  if (given("eps_gap")) spec.solver.eps_gap = f.eps_gap;
  if (given("max_iter")) spec.solver.max_iterations = f.max_iter;
  if (given("imax")) spec.lamp.max_outer = f.imax;
  if (given("lamp_tol")) spec.lamp.tol = f.lamp_tol;
  if (given("lp")) spec.solver.algorithm = parse_lp_algorithm(f.lp);
  if (given("success_threshold")) spec.success_threshold = f.success_threshold;

  if (!f.config.empty()) {
    std::ifstream file(f.config);
    if (!file) throw DomainError("cannot read config '" + f.config + "'");
    apply_config(Json::parse(file), spec, set, err);
  }
  return spec;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Phase retrieval by linear programming: theory curves, solves and sweeps",
               "phaselp"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Flags theory_flags, solve_flags, sweep_flags;
  auto* theory_cmd = app.add_subcommand("theory", "Asymptotic predictions on an (alpha, rho) grid");
  auto* solve_cmd = app.add_subcommand("solve", "Solve one random instance, JSON report");
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo sweep, CSV per cell");
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  const auto theory_bound = add_run_flags(theory_cmd, theory_flags);
  const auto solve_bound = add_run_flags(solve_cmd, solve_flags);
  const auto sweep_bound = add_run_flags(sweep_cmd, sweep_flags);
  std::string manifest, replay_out;
  replay_cmd->add_option("manifest", manifest, "Manifest JSON")->required();
  replay_cmd->add_option("--out", replay_out, "Write the artifact here instead");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*theory_cmd) return dispatch(build_spec("theory", theory_flags, theory_bound, err), out, err);
    if (*solve_cmd) return dispatch(build_spec("solve", solve_flags, solve_bound, err), out, err);
    if (*sweep_cmd) return dispatch(build_spec("sweep", sweep_flags, sweep_bound, err), out, err);
    return cmd_replay(manifest, replay_out, out, err);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace phaselp::cli
