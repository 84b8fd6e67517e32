#pragma once

#include <cstddef>
#include <span>

#include "dualsr/certificate.hpp"
#include "dualsr/numerics.hpp"

namespace dualsr {

/// Location-stability constants for one spike t* of a certificate.
struct LocationBoundReport {
  double t_star = 0.0;
  /// q''(t*), negative at a nondegenerate maximizer.
  double q2 = 0.0;
  /// ||lambda*||_2 / sigma.
  double R = 0.0;
  double delta0 = 0.0;
  double delta_lambda = 0.0;
  double C_tstar = 0.0;
  /// 2 sqrt(2M) (2 + cR) / (|q''| sqrt(e)): the part of C_tstar carrying M.
  double C_tstar_m_term = 0.0;
  std::size_t M = 0;
  double sigma = 0.0;
  double c_const = kUniversalConstant;
};

/// Closed-form constants from |q''(t*)|, ||lambda||_2, sigma and M.
LocationBoundReport location_constants(double q2, double lambda_norm, double sigma,
                                       std::size_t M);

/// delta_lambda as the product (sigma sqrt(e) |q''| / (2 sqrt(2M))) * delta0.
double delta_lambda_product(double q2_abs, double lambda_norm, double sigma, std::size_t M);

/// delta_lambda as |q''|^2 sigma^3 sqrt(e) / (4 sqrt(2) (2 + cR) M).
double delta_lambda_closed(double q2_abs, double lambda_norm, double sigma, std::size_t M);

/// Tolerance on |q(t*) - 1| accepted by location_report.
inline constexpr double kSpikeValueTol = 1e-6;

/// Throws InvalidArgument unless q''(t*) < 0 and |q(t*) - 1| <= kSpikeValueTol.
LocationBoundReport location_report(const DualCertificate& cert, double t_star);

struct LocationBound {
  double bound = 0.0;
  bool admissible = false;
};

/// bound = C_tstar ||lambda - lambda*||_2, admissible iff the distance is at most delta_lambda.
LocationBound location_bound(const LocationBoundReport& report, const Vector& lambda,
                             const Vector& lambda_star);

struct AmplitudeBoundReport {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  /// Largest ||t~ - t*||_2 for which the first-order amplitude bound applies.
  double admissible_radius = 0.0;
  /// Multiplies ||a*||_2 ||t~ - t*||_2 in the first-order amplitude bound.
  double first_order_coeff = 0.0;
  /// 4 e^{4/sigma^2} sqrt(M) / sigma^2.
  double E_frobenius_coeff = 0.0;
  double sigma = 0.0;
  std::size_t M = 0;
};

/// e^{4/sigma^2} overflows for sigma below about 0.0735: coefficients are then
/// +inf and admissible_radius is 0.
AmplitudeBoundReport amplitude_report(const Matrix& phi, double sigma, std::size_t M);

/// E_frobenius_coeff * ||t_tilde - t_star||_2 (0 when the locations coincide).
double E_frobenius_bound(const AmplitudeBoundReport& report, std::span<const double> t_star,
                         std::span<const double> t_tilde);

struct PerturbationMatrices {
  Matrix Phi;
  Matrix Phi_tilde;
  Matrix E;
  /// E^T Phi + Phi^T E + E^T E.
  Matrix Delta;
  /// 2 ||E|| ||Phi|| + ||E||^2.
  double D = 0.0;
  /// Truncated sum_{k=1}^{n} (-1)^k G (Delta G)^k with G = (Phi^T Phi)^{-1}.
  Matrix S_Phi;
  /// G E^T + S_Phi Phi^T + S_Phi E^T.
  Matrix F_transpose;
  /// ||Phi^dagger||_2 = 1 / sigma_min(Phi).
  double pinv_norm = 0.0;
  /// D ||Phi^dagger||^2, the convergence ratio of the series.
  double rho = 0.0;
  int series_order = 0;
  /// rho^{n+1} / (1 - rho).
  double tail_estimate = 0.0;
  double S_Phi_norm = 0.0;
  double S_Phi_bound = 0.0;
  double F_norm = 0.0;
  double F_bound = 0.0;
};

/// Relative slack applied when asserting the norm bounds.
inline constexpr double kBoundSlack = 1e-10;

/// Throws InvalidArgument (naming rho) if D ||Phi^dagger||^2 >= 1 and
/// BoundViolation if ||Delta|| <= D, the ||S_Phi|| bound or the ||F|| bound fails.
PerturbationMatrices matrix_perturbation(const Matrix& phi, const Matrix& e, int series_order = 30);

}  // namespace dualsr
