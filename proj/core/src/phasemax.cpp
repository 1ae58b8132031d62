#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "phaselp/errors.hpp"
#include "phaselp/solver.hpp"

namespace phaselp {
namespace {

using Array = Eigen::ArrayXd;

double y_scale(const Vector& y) { return std::max(1.0, y.cwiseAbs().maxCoeff()); }

bool certificate_ok(const Certificate& c, const SolverConfig& config) {
  return c.feasibility_residual <= config.eps_feasibility && std::abs(c.gap) <= config.eps_gap &&
         c.dual_residual <= config.eps_gap;
}

// Least-norm correction of u onto the affine set A^T u = anchor. With an exact
// dual-feasible u, weak duality y^T|u| >= anchor^T x holds for every feasible x.
class DualProjector {
 public:
  explicit DualProjector(const Matrix& a) : a_(a) {}

  Vector operator()(const Vector& u, const Vector& anchor) {
    if (!factored_) {
      Matrix gram = Matrix::Zero(a_.cols(), a_.cols());
      gram.selfadjointView<Eigen::Lower>().rankUpdate(a_.transpose());
      llt_.compute(gram);
      ok_ = llt_.info() == Eigen::Success;
      factored_ = true;
    }
    if (!ok_) return u;
    const Vector residual = a_.transpose() * u - anchor;
    return u - a_ * llt_.solve(residual);
  }

 private:
  const Matrix& a_;
  Eigen::LLT<Matrix, Eigen::Lower> llt_;
  bool factored_ = false;
  bool ok_ = false;
};

struct Candidate {
  Vector x;
  Vector u;
  Certificate cert;
};

// Snap to the vertex spanned by the n constraints with the smallest activity
// score, on the sides given by `signs`. Also returns the basic dual of that
// vertex when it has the right signs; otherwise keeps `fallback_dual`.
std::optional<Candidate> polish_vertex(const ProblemInstance& instance, const Vector& anchor,
                                       const Array& score, const Array& signs,
                                       const Vector& fallback_dual) {
  const Matrix& a = instance.sensing();
  const Vector& y = instance.magnitudes();
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (m < n) return std::nullopt;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return score(i) < score(j); });

  Matrix basis(n, n);
  Vector rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = order[static_cast<std::size_t>(k)];
    basis.row(k) = signs(i) * a.row(i);
    rhs(k) = y(i);
  }
  Eigen::PartialPivLU<Matrix> lu(basis);
  if (!(lu.rcond() > 1e-12)) return std::nullopt;

  Candidate out;
  out.x = lu.solve(rhs);
  if (!out.x.allFinite()) return std::nullopt;

  const Vector basic = lu.transpose().solve(anchor);
  if (basic.allFinite() && basic.minCoeff() >= 0.0) {
    out.u = Vector::Zero(m);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Index i = order[static_cast<std::size_t>(k)];
      out.u(i) = signs(i) * basic(k);
    }
  } else {
    out.u = fallback_dual;
  }
  out.cert = certify(instance, anchor, out.x, out.u);
  return out;
}

// Keeps the polished vertex only when it is at least as good as the iterate.
Candidate choose(const ProblemInstance& instance, const Vector& anchor, Candidate iterate,
                 std::optional<Candidate> polished, const SolverConfig& config, bool& used_polish) {
  used_polish = false;
  if (!polished) return iterate;
  const double scale = std::max(1.0, std::abs(iterate.cert.objective));
  const bool feasible = polished->cert.feasibility_residual <= 1e-12;
  const bool no_worse = polished->cert.objective >= iterate.cert.objective - config.eps_gap * scale;
  if (!feasible || !no_worse) return iterate;

  // The polished x may pair better with the iterate's dual than with its own
  // basic dual; keep whichever gives the tighter certificate.
  Certificate with_iterate_dual = certify(instance, anchor, polished->x, iterate.u);
  if (std::abs(with_iterate_dual.gap) < std::abs(polished->cert.gap) ||
      polished->cert.dual_residual > config.eps_gap) {
    polished->u = iterate.u;
    polished->cert = with_iterate_dual;
  }
  used_polish = true;
  return *std::move(polished);
}

SolverReport to_report(Candidate c, int iterations, LpAlgorithm algorithm, bool polished,
                       const SolverConfig& config) {
  SolverReport r;
  r.solution = std::move(c.x);
  r.dual = std::move(c.u);
  r.objective = c.cert.objective;
  r.feasibility_residual = c.cert.feasibility_residual;
  r.gap = c.cert.gap;
  r.dual_residual = c.cert.dual_residual;
  r.iterations = iterations;
  r.converged = certificate_ok(c.cert, config);
  r.polished = polished;
  r.algorithm = algorithm;
  r.threads = 1;
  return r;
}

double max_step(const Array& v, const Array& dv) {
  double step = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) step = std::min(step, -v(i) / dv(i));
  }
  return step;
}

struct Direction {
  Vector dx;
  Array ds1, ds2, dz1, dz2;
};

// Inequality-form LP  min -anchor^T x  s.t.  A x + s1 = y, -A x + s2 = y,
// s >= 0, with multipliers z1 (upper side) and z2 (lower side).
SolverReport solve_interior_point(const ProblemInstance& instance, const Vector& anchor,
                                  const SolverConfig& config) {
  const Matrix& a = instance.sensing();
  const Vector& y = instance.magnitudes();
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  const double anchor_scale = std::max(1.0, anchor.norm());

  Vector x = Vector::Zero(n);
  Array s1 = y.array();
  Array s2 = y.array();
  Array z1 = Array::Ones(m);
  Array z2 = Array::Ones(m);

  DualProjector project(a);
  std::optional<Candidate> best;
  bool best_polished = false;

  Matrix normal(n, n);
  Eigen::LLT<Matrix, Eigen::Lower> llt;

  int iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    const Array ax = (a * x).array();
    const Array rp1 = ax + s1 - y.array();
    const Array rp2 = -ax + s2 - y.array();
    const Vector rd = a.transpose() * (z1 - z2).matrix() - anchor;
    const double complementarity = (s1 * z1).sum() + (s2 * z2).sum();
    const double mu = complementarity / static_cast<double>(2 * m);
    const double objective = anchor.dot(x);

    const double ipm_gap = complementarity / std::max(1.0, std::abs(objective));
    const double ipm_dual = rd.norm() / anchor_scale;
    if (ipm_gap <= config.eps_gap && ipm_dual <= config.eps_gap) {
      Candidate iterate;
      iterate.x = x;
      iterate.u = project((z1 - z2).matrix(), anchor);
      iterate.cert = certify(instance, anchor, iterate.x, iterate.u);
      std::optional<Candidate> polished;
      if (config.polish) {
        const Array score = s1.min(s2) / z1.max(z2);
        const Array signs = (s1 <= s2).select(Array::Ones(m), -Array::Ones(m));
        polished = polish_vertex(instance, anchor, score, signs, iterate.u);
      }
      bool used = false;
      Candidate c = choose(instance, anchor, std::move(iterate), std::move(polished), config, used);
      const bool done = certificate_ok(c.cert, config);
      best = std::move(c);
      best_polished = used;
      if (done || ipm_gap <= 1e-3 * config.eps_gap) break;
    }

    const Array w1 = z1 / s1;
    const Array w2 = z2 / s2;
    const Array d = w1 + w2;

    const Matrix weighted = a.array().colwise() * d.sqrt();
    normal.setZero();
    normal.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
    llt.compute(normal);
    double regularization = 1e-14 * (normal.diagonal().mean() + 1.0);
    for (int retry = 0; llt.info() != Eigen::Success && retry < 8; ++retry) {
      Matrix shifted = normal;
      shifted.diagonal().array() += regularization;
      llt.compute(shifted);
      regularization *= 100.0;
    }
    if (llt.info() != Eigen::Success) break;

    const auto solve = [&](const Array& rc1, const Array& rc2) {
      Direction dir;
      const Array e1 = (-rc1 + z1 * rp1) / s1;
      const Array e2 = (-rc2 + z2 * rp2) / s2;
      const Vector rhs = -rd - a.transpose() * (e1 - e2).matrix();
      dir.dx = llt.solve(rhs);
      const Array adx = (a * dir.dx).array();
      dir.ds1 = -rp1 - adx;
      dir.ds2 = -rp2 + adx;
      dir.dz1 = w1 * adx + e1;
      dir.dz2 = -w2 * adx + e2;
      return dir;
    };

    const Direction affine = solve(s1 * z1, s2 * z2);
    const double ap_aff =
        std::min(1.0, std::min(max_step(s1, affine.ds1), max_step(s2, affine.ds2)));
    const double ad_aff =
        std::min(1.0, std::min(max_step(z1, affine.dz1), max_step(z2, affine.dz2)));
    const double mu_aff = (((s1 + ap_aff * affine.ds1) * (z1 + ad_aff * affine.dz1)).sum() +
                           ((s2 + ap_aff * affine.ds2) * (z2 + ad_aff * affine.dz2)).sum()) /
                          static_cast<double>(2 * m);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

    const Direction step = solve(s1 * z1 + affine.ds1 * affine.dz1 - sigma * mu,
                                 s2 * z2 + affine.ds2 * affine.dz2 - sigma * mu);
    const double ap =
        std::min(1.0, 0.99 * std::min(max_step(s1, step.ds1), max_step(s2, step.ds2)));
    const double ad =
        std::min(1.0, 0.99 * std::min(max_step(z1, step.dz1), max_step(z2, step.dz2)));
    if (!(ap > 1e-14 || ad > 1e-14)) break;

    x += ap * step.dx;
    s1 += ap * step.ds1;
    s2 += ap * step.ds2;
    z1 += ad * step.dz1;
    z2 += ad * step.dz2;
  }

  if (!best) {
    Candidate iterate;
    iterate.x = x;
    iterate.u = project((z1 - z2).matrix(), anchor);
    iterate.cert = certify(instance, anchor, iterate.x, iterate.u);
    best = std::move(iterate);
    best_polished = false;
  }
  return to_report(*std::move(best), iter, LpAlgorithm::InteriorPoint, best_polished, config);
}

// Chambolle-Pock on  min_x max_u  -anchor^T x + u^T A x - y^T |u|.
SolverReport solve_primal_dual(const ProblemInstance& instance, const Vector& anchor,
                               const SolverConfig& config, const Vector* warm_start) {
  const Matrix& a = instance.sensing();
  const Vector& y = instance.magnitudes();
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();

  const double norm = std::max(estimate_spectral_norm(a) * 1.01, 1e-12);
  const double balance = std::sqrt(config.step_ratio);
  const double tau = 0.95 * balance / norm;
  const double sigma = 0.95 / (balance * norm);

  Vector x = warm_start ? *warm_start : Vector::Zero(n);
  Vector u = Vector::Zero(m);
  Vector x_bar = x;

  DualProjector project(a);
  const auto candidate = [&]() {
    Candidate c;
    c.x = x;
    // Pull the primal iterate back inside the polytope along the ray.
    const double stretch = ((a * x).cwiseAbs().array() / y.array()).maxCoeff();
    if (stretch > 1.0) c.x /= stretch;
    c.u = project(u, anchor);
    c.cert = certify(instance, anchor, c.x, c.u);
    return c;
  };

  constexpr int kCheckEvery = 25;
  int iter = 0;
  Candidate last;
  bool have_last = false;
  for (; iter < config.max_iterations; ++iter) {
    const Vector v = u + sigma * (a * x_bar);
    const Array threshold = sigma * y.array();
    u = (v.array().sign() * (v.array().abs() - threshold).max(0.0)).matrix();
    const Vector x_next = x - tau * (a.transpose() * u - anchor);
    x_bar = 2.0 * x_next - x;
    x = x_next;

    if ((iter + 1) % kCheckEvery == 0) {
      last = candidate();
      have_last = true;
      if (certificate_ok(last.cert, config)) {
        ++iter;
        break;
      }
    }
  }
  if (!have_last || !certificate_ok(last.cert, config)) last = candidate();

  bool used_polish = false;
  if (config.polish && !certificate_ok(last.cert, config)) {
    const Array ax = (a * last.x).array();
    const Array score = y.array() - ax.abs();
    const Array signs = (ax >= 0.0).select(Array::Ones(m), -Array::Ones(m));
    auto polished = polish_vertex(instance, anchor, score, signs, last.u);
    last = choose(instance, anchor, std::move(last), std::move(polished), config, used_polish);
  }
  return to_report(std::move(last), iter, LpAlgorithm::PrimalDual, used_polish, config);
}

}  // namespace

std::string_view to_string(LpAlgorithm algorithm) {
  switch (algorithm) {
    case LpAlgorithm::InteriorPoint:
      return "ipm";
    case LpAlgorithm::PrimalDual:
      return "pdhg";
  }
  return "unknown";
}

LpAlgorithm parse_lp_algorithm(std::string_view name) {
  if (name == "ipm") return LpAlgorithm::InteriorPoint;
  if (name == "pdhg") return LpAlgorithm::PrimalDual;
  throw DomainError("unknown LP algorithm '" + std::string(name) + "' (expected ipm or pdhg)");
}

void SolverConfig::validate() const {
  if (!(eps_feasibility > 0.0) || !(eps_gap > 0.0)) {
    throw DomainError("solver tolerances must be > 0");
  }
  if (max_iterations < 1) throw DomainError("max_iterations must be >= 1");
  if (!(step_ratio > 0.0) || !std::isfinite(step_ratio)) {
    throw DomainError("step_ratio must be finite and > 0");
  }
}

Certificate certify(const ProblemInstance& instance, const Vector& anchor, const Vector& x,
                    const Vector& dual) {
  const Matrix& a = instance.sensing();
  const Vector& y = instance.magnitudes();
  if (x.size() != a.cols() || anchor.size() != a.cols() || dual.size() != a.rows()) {
    throw DimensionMismatch("certify: shapes do not match the instance");
  }
  Certificate c;
  c.objective = anchor.dot(x);
  c.dual_objective = y.dot(dual.cwiseAbs());
  const double violation = ((a * x).cwiseAbs() - y).maxCoeff();
  c.feasibility_residual = std::max(violation, 0.0) / y_scale(y);
  c.gap = (c.dual_objective - c.objective) / std::max(1.0, std::abs(c.objective));
  c.dual_residual = (a.transpose() * dual - anchor).norm() / std::max(1.0, anchor.norm());
  return c;
}

double estimate_spectral_norm(const Matrix& a, int iterations) {
  Vector v = Vector::Ones(a.cols()).normalized();
  double estimate = 0.0;
  for (int k = 0; k < iterations; ++k) {
    const Vector av = a * v;
    estimate = av.norm();
    const Vector w = a.transpose() * av;
    const double wn = w.norm();
    if (!(wn > 0.0)) break;
    v = w / wn;
  }
  return (a * v).norm() > estimate ? (a * v).norm() : estimate;
}

SolverReport phasemax(const ProblemInstance& instance, const SolverConfig& config) {
  return phasemax(instance, instance.anchor(), config);
}

SolverReport phasemax(const ProblemInstance& instance, const Vector& anchor,
                      const SolverConfig& config, const Vector* warm_start) {
  config.validate();
  if (anchor.size() != instance.cols()) {
    throw DimensionMismatch("anchor has length " + std::to_string(anchor.size()) +
                            ", instance has n = " + std::to_string(instance.cols()));
  }
  if (!anchor.allFinite()) throw DomainError("anchor contains non-finite entries");
  if (!(anchor.norm() > 1e-14)) throw DegenerateAnchor("anchor is numerically zero");
  if (warm_start && warm_start->size() != instance.cols()) {
    throw DimensionMismatch("warm start has the wrong length");
  }

  switch (config.algorithm) {
    case LpAlgorithm::InteriorPoint:
      return solve_interior_point(instance, anchor, config);
    case LpAlgorithm::PrimalDual:
      return solve_primal_dual(instance, anchor, config, warm_start);
  }
  throw DomainError("unknown LP algorithm");
}

}  // namespace phaselp
