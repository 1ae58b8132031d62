#pragma once

// Large-system predictions for PhaseMax and PhaseLamp under Gaussian
// measurements. Everything here is a pure function of (alpha, rho); nothing
// depends on a concrete problem instance.

namespace phaselp::theory {

/// Oversampling ratio m/n. Every formula in this header requires alpha > 2.
class Alpha {
 public:
  explicit Alpha(double value);

  double value() const noexcept { return value_; }
  /// 1 / tan(pi / alpha)
  double c() const noexcept { return c_; }

 private:
  double value_;
  double c_;
};

/// Cosine similarity between anchor and truth, in (0, 1].
class CosineSimilarity {
 public:
  explicit CosineSimilarity(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

struct TheoryPrediction {
  double s_star = 0.0;  ///< limit of the truth-aligned component of the LP solution
  double r_star = 0.0;  ///< limit of the norm of the orthogonal component
  double nmse = 0.0;    ///< 1 + s*^2 + r*^2 - 2|s*|
  double rho_c = 0.0;   ///< PhaseMax recovery threshold at this alpha
};

struct LampCertificate {
  double theta_star = 0.0;
  double s_hat = 0.0;
  double ell = 0.0;
  double rho_s = 0.0;  ///< PhaseLamp recovers whenever rho exceeds this
};

double r_alpha(double s, Alpha alpha);

/// Same function as r_alpha, written in terms of tan(pi/alpha) as the
/// maximizer of r^2 - alpha * c_d(s, r) over r >= 0.
double r_star_of_s(double s, Alpha alpha);

double g_alpha(double s, Alpha alpha);

/// d/ds g_alpha(s) = -2s + (2 alpha / pi) atan(s / sqrt(c^2 + 1 - s^2)).
double g_alpha_derivative(double s, Alpha alpha);

/// sqrt(1 - (pi/alpha) / tan(pi/alpha)).
double rho_critical(Alpha alpha);

/// rho * s + sqrt((1 - rho^2) g_alpha(s)), the scalar objective whose
/// maximizer over [0, 1] is s*. Defined for s in [0, 1].
double spo_objective(double s, CosineSimilarity rho, Alpha alpha);

/// Derivative of spo_objective in s on [0, 1). At s = 1 returns the
/// left-sided limit.
double spo_objective_derivative(double s, CosineSimilarity rho, Alpha alpha);

/// Solves the scalar maximization for s* and returns the predicted NMSE of
/// PhaseMax. Above rho_c the result is exactly (1, 0, 0).
///
/// Throws ConvergenceError if the maximizer cannot be bracketed.
TheoryPrediction spo_solve(CosineSimilarity rho, Alpha alpha);

/// E[min(|q| - |r g + s q|, 0)^2] for independent standard normals q, g,
/// in closed form. r = 0 is handled by its exact limit max(|s| - 1, 0)^2.
double c_d(double s, double r);

/// Left side minus right side of the PhaseLamp angle equation
///   theta cos^2 + (1 + 3 sin^2) atan(sin cos / (1 + sin^2))
///     = 2 sin cos + (pi / alpha) sin^2 cos^2.
double lamp_equation_residual(double theta, Alpha alpha);

/// Unique root of lamp_equation_residual in (0, pi/2). Scans 4096 interior
/// points for the sign change and bisects to a 1e-14 bracket.
double lamp_theta(Alpha alpha);

LampCertificate lamp_certificate(Alpha alpha);

}  // namespace phaselp::theory
