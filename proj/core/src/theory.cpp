#include "phaselp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "phaselp/errors.hpp"

namespace phaselp::theory {
namespace {

constexpr double kPi = std::numbers::pi;

void require_unit_interval(double s, const char* what) {
  if (!(std::abs(s) <= 1.0)) {
    throw DomainError(std::string(what) + ": |s| must be <= 1, got " + std::to_string(s));
  }
}

// sqrt(c^2 + 1 - s^2) with 1 - s^2 formed as (1 - s)(1 + s), so that the
// result is exactly c at |s| = 1.
double radial(double s, double c) { return std::sqrt(c * c + (1.0 - s) * (1.0 + s)); }

}  // namespace

Alpha::Alpha(double value) : value_(value), c_(0.0) {
  if (!std::isfinite(value) || !(value > 2.0)) {
    throw DomainError("oversampling ratio alpha must be finite and > 2, got " +
                      std::to_string(value));
  }
  c_ = 1.0 / std::tan(kPi / value);
}

CosineSimilarity::CosineSimilarity(double value) : value_(value) {
  if (!(value > 0.0 && value <= 1.0)) {
    throw DomainError("cosine similarity must lie in (0, 1], got " + std::to_string(value));
  }
}

double r_alpha(double s, Alpha alpha) {
  require_unit_interval(s, "r_alpha");
  const double c = alpha.c();
  // Rationalized to avoid cancellation when c is large.
  return (1.0 - s) * (1.0 + s) / (radial(s, c) + c);
}

double r_star_of_s(double s, Alpha alpha) {
  require_unit_interval(s, "r_star_of_s");
  const double t = std::tan(kPi / alpha.value());
  return std::sqrt(1.0 / (t * t) + (1.0 - s) * (1.0 + s)) - 1.0 / t;
}

double g_alpha(double s, Alpha alpha) {
  require_unit_interval(s, "g_alpha");
  if (std::abs(s) == 1.0) return 0.0;
  const double a = alpha.value();
  const double r = r_alpha(s, alpha);
  return -1.0 - s * s + 2.0 * a * r / kPi + (2.0 * a * s / kPi) * std::atan(s / (r + alpha.c()));
}

double g_alpha_derivative(double s, Alpha alpha) {
  require_unit_interval(s, "g_alpha_derivative");
  if (std::abs(s) == 1.0) return 0.0;
  const double a = alpha.value();
  return -2.0 * s + (2.0 * a / kPi) * std::atan(s / radial(s, alpha.c()));
}

double rho_critical(Alpha alpha) {
  const double t = kPi / alpha.value();
  return std::sqrt(1.0 - t / std::tan(t));
}

double spo_objective(double s, CosineSimilarity rho, Alpha alpha) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw DomainError("spo_objective: s must lie in [0, 1], got " + std::to_string(s));
  }
  const double p = rho.value();
  const double g = std::max(g_alpha(s, alpha), 0.0);
  return p * s + std::sqrt((1.0 - p) * (1.0 + p) * g);
}

double spo_objective_derivative(double s, CosineSimilarity rho, Alpha alpha) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw DomainError("spo_objective_derivative: s must lie in [0, 1], got " + std::to_string(s));
  }
  const double p = rho.value();
  const double q = std::sqrt((1.0 - p) * (1.0 + p));
  const double a = alpha.value();
  // g has a double root at s = 1, so g'/(2 sqrt g) -> -sqrt(g''/2) there.
  // Close to 1 the direct ratio loses all accuracy; use the local quadratic.
  if (1.0 - s < 1e-5) {
    const double curvature = -2.0 + 2.0 * a / (kPi * radial(s, alpha.c()));
    return p - q * std::sqrt(std::max(curvature, 0.0) / 2.0);
  }
  const double g = g_alpha(s, alpha);
  if (g <= 0.0) {
    throw ConvergenceError("spo_objective_derivative: g_alpha vanished inside (0, 1)");
  }
  return p + q * g_alpha_derivative(s, alpha) / (2.0 * std::sqrt(g));
}

TheoryPrediction spo_solve(CosineSimilarity rho, Alpha alpha) {
  TheoryPrediction out;
  out.rho_c = rho_critical(alpha);
  if (rho.value() > out.rho_c || spo_objective_derivative(1.0, rho, alpha) >= 0.0) {
    out.s_star = 1.0;
    out.r_star = 0.0;
    out.nmse = 0.0;
    return out;
  }

  const auto objective = [&](double s) { return spo_objective(s, rho, alpha); };
  const auto slope = [&](double s) { return spo_objective_derivative(s, rho, alpha); };

  // Golden-section search narrows the maximizer of the concave objective...
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = 0.0;
  double hi = 1.0;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-6; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = objective(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = objective(x1);
    }
  }

  // ...then bisection on the derivative resolves it to 1e-12.
  lo = std::max(0.0, lo - 1e-6);
  hi = std::min(1.0, hi + 1e-6);
  if (!(slope(lo) > 0.0 && slope(hi) < 0.0)) {
    lo = 0.0;
    hi = 1.0;
    if (!(slope(lo) > 0.0 && slope(hi) < 0.0)) {
      throw ConvergenceError("spo_solve: derivative does not change sign on [0, 1] (rho=" +
                             std::to_string(rho.value()) +
                             ", alpha=" + std::to_string(alpha.value()) + ")");
    }
  }
  int it = 0;
  for (; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (hi - lo > 1e-12) {
    throw ConvergenceError("spo_solve: bisection did not reach tolerance");
  }

  const double s = 0.5 * (lo + hi);
  out.s_star = s;
  out.r_star = r_alpha(s, alpha);
  out.nmse = 1.0 + s * s + out.r_star * out.r_star - 2.0 * std::abs(s);
  return out;
}

double c_d(double s, double r) {
  if (!(r >= 0.0)) {
    throw DomainError("c_d: r must be >= 0, got " + std::to_string(r));
  }
  if (r == 0.0) {
    const double excess = std::max(std::abs(s) - 1.0, 0.0);
    return excess * excess;
  }
  const double a = 1.0 - s;
  const double b = 1.0 + s;
  const double ta = (a * a + r * r) * (kPi / 2.0 - std::atan(a / r));
  const double tb = (b * b + r * r) * (kPi / 2.0 - std::atan(b / r));
  return (ta + tb - 2.0 * r) / kPi;
}

double lamp_equation_residual(double theta, Alpha alpha) {
  const double sn = std::sin(theta);
  const double cs = std::cos(theta);
  const double sc = sn * cs;
  const double lhs =
      theta * cs * cs + (1.0 + 3.0 * sn * sn) * std::atan(sc / (1.0 + sn * sn));
  const double rhs = 2.0 * sc + (kPi / alpha.value()) * sc * sc;
  return lhs - rhs;
}

double lamp_theta(Alpha alpha) {
  constexpr int kScan = 4096;
  const double step = (kPi / 2.0) / kScan;

  int changes = 0;
  double lo = 0.0;
  double hi = 0.0;
  double prev_theta = step;
  double prev = lamp_equation_residual(prev_theta, alpha);
  for (int j = 2; j < kScan; ++j) {
    const double theta = j * step;
    const double value = lamp_equation_residual(theta, alpha);
    if ((prev < 0.0 && value >= 0.0) || (prev > 0.0 && value <= 0.0)) {
      ++changes;
      lo = prev_theta;
      hi = theta;
    }
    prev = value;
    prev_theta = theta;
  }
  if (changes != 1) {
    throw ConvergenceError("lamp_theta: expected exactly one sign change in (0, pi/2), found " +
                           std::to_string(changes) + " (alpha=" +
                           std::to_string(alpha.value()) + ")");
  }

  const bool rising = lamp_equation_residual(lo, alpha) < 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double value = lamp_equation_residual(mid, alpha);
    if ((value < 0.0) == rising) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

LampCertificate lamp_certificate(Alpha alpha) {
  LampCertificate out;
  const double a = alpha.value();
  const double c = alpha.c();
  out.theta_star = lamp_theta(alpha);
  const double t = std::tan(out.theta_star);
  out.s_hat = t / (std::sqrt(1.0 + c * c + t * t) + c);
  const double s = out.s_hat;
  out.ell = (s - (a / kPi) * std::atan(s / radial(s, c))) / std::sqrt(g_alpha(s, alpha));
  out.rho_s = out.ell / std::sqrt(out.ell * out.ell + 1.0);
  return out;
}

}  // namespace phaselp::theory
