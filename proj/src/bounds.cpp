#include "dualsr/bounds.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dualsr/errors.hpp"

namespace dualsr {

namespace {

constexpr double kSqrtE = 1.6487212707001282;

void check_constants_input(double q2_abs, double lambda_norm, double sigma, std::size_t M) {
  if (!(q2_abs > 0.0) || !std::isfinite(q2_abs)) {
    throw InvalidArgument("location constants: |q''| must be positive and finite");
  }
  if (!(lambda_norm >= 0.0) || !std::isfinite(lambda_norm)) {
    throw InvalidArgument("location constants: ||lambda|| must be finite and >= 0");
  }
  if (!(sigma > 0.0)) throw InvalidArgument("location constants: sigma must be positive");
  if (M == 0) throw InvalidArgument("location constants: M must be >= 1");
}

}  // namespace

double delta_lambda_product(double q2_abs, double lambda_norm, double sigma, std::size_t M) {
  check_constants_input(q2_abs, lambda_norm, sigma, M);
  const double m = static_cast<double>(M);
  const double cr = kUniversalConstant * lambda_norm / sigma;
  const double delta0 = sigma * sigma * q2_abs / (std::sqrt(m) * (4.0 + 2.0 * cr));
  return sigma * kSqrtE * q2_abs / (2.0 * std::sqrt(2.0 * m)) * delta0;
}

double delta_lambda_closed(double q2_abs, double lambda_norm, double sigma, std::size_t M) {
  check_constants_input(q2_abs, lambda_norm, sigma, M);
  const double cr = kUniversalConstant * lambda_norm / sigma;
  return q2_abs * q2_abs * sigma * sigma * sigma * kSqrtE /
         (4.0 * std::numbers::sqrt2 * (2.0 + cr) * static_cast<double>(M));
}

LocationBoundReport location_constants(double q2, double lambda_norm, double sigma,
                                       std::size_t M) {
  const double q2_abs = std::abs(q2);
  check_constants_input(q2_abs, lambda_norm, sigma, M);
  LocationBoundReport r;
  r.q2 = q2;
  r.sigma = sigma;
  r.M = M;
  r.R = lambda_norm / sigma;
  const double m = static_cast<double>(M);
  const double cr = r.c_const * r.R;
  r.delta0 = sigma * sigma * q2_abs / (std::sqrt(m) * (4.0 + 2.0 * cr));
  r.delta_lambda = sigma * kSqrtE * q2_abs / (2.0 * std::sqrt(2.0 * m)) * r.delta0;
  r.C_tstar_m_term = 2.0 * std::sqrt(2.0 * m) * (2.0 + cr) / (q2_abs * kSqrtE);
  r.C_tstar = (1.0 + r.C_tstar_m_term) / (4.0 + cr);
  return r;
}

LocationBoundReport location_report(const DualCertificate& cert, double t_star) {
  const auto v = cert.q012(t_star);
  if (!(v[2] < 0.0)) {
    std::ostringstream msg;
    msg << "location_report: q''(" << t_star << ") = " << v[2] << " is not negative";
    throw InvalidArgument(msg.str());
  }
  if (!(std::abs(v[0] - 1.0) <= kSpikeValueTol)) {
    std::ostringstream msg;
    msg << "location_report: q(" << t_star << ") = " << v[0] << " is not 1 within "
        << kSpikeValueTol;
    throw InvalidArgument(msg.str());
  }
  LocationBoundReport r = location_constants(v[2], cert.lambda().norm(), cert.kernel().sigma(),
                                             cert.design().size());
  r.t_star = t_star;
  return r;
}

LocationBound location_bound(const LocationBoundReport& report, const Vector& lambda,
                             const Vector& lambda_star) {
  if (lambda.size() != lambda_star.size()) {
    throw InvalidArgument("location_bound: lambda and lambda_star differ in length");
  }
  const double dist = (lambda - lambda_star).norm();
  return {report.C_tstar * dist, dist <= report.delta_lambda};
}

AmplitudeBoundReport amplitude_report(const Matrix& phi, double sigma, std::size_t M) {
  if (!(sigma > 0.0)) throw InvalidArgument("amplitude_report: sigma must be positive");
  if (M == 0) throw InvalidArgument("amplitude_report: M must be >= 1");
  if (phi.rows() < phi.cols() || phi.cols() == 0) {
    throw IllPosed("amplitude_report: Phi must have at least as many rows as columns");
  }
  const SingularExtremes ext = singular_extremes(phi);
  if (!(ext.min >= kRankTolerance * ext.max) || ext.max == 0.0) {
    throw IllPosed("amplitude_report: Phi is rank deficient");
  }
  AmplitudeBoundReport r;
  r.sigma = sigma;
  r.M = M;
  r.sigma_min = ext.min;
  r.sigma_max = ext.max;
  const double s2 = sigma * sigma;
  const double growth = std::exp(4.0 / s2);
  const double ratio = ext.min / ext.max;
  r.E_frobenius_coeff = 4.0 * growth * std::sqrt(static_cast<double>(M)) / s2;
  r.first_order_coeff = r.E_frobenius_coeff / ext.min;
  // sqrt(1 + x^2) - 1 without cancellation.
  const double surd = ratio * ratio / (std::sqrt(1.0 + ratio * ratio) + 1.0);
  r.admissible_radius = s2 * ext.max / (4.0 * growth * std::sqrt(static_cast<double>(M))) * surd;
  return r;
}

double E_frobenius_bound(const AmplitudeBoundReport& report, std::span<const double> t_star,
                         std::span<const double> t_tilde) {
  if (t_star.size() != t_tilde.size()) {
    throw InvalidArgument("E_frobenius_bound: location vectors differ in length");
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < t_star.size(); ++k) {
    const double d = t_tilde[k] - t_star[k];
    sq += d * d;
  }
  if (sq == 0.0) return 0.0;
  return report.E_frobenius_coeff * std::sqrt(sq);
}

PerturbationMatrices matrix_perturbation(const Matrix& phi, const Matrix& e, int series_order) {
  if (series_order < 1) throw InvalidArgument("matrix_perturbation: series_order must be >= 1");
  if (phi.rows() != e.rows() || phi.cols() != e.cols()) {
    throw InvalidArgument("matrix_perturbation: Phi and E differ in shape");
  }
  PerturbationMatrices p;
  p.series_order = series_order;
  p.Phi = phi;
  p.E = e;
  p.Phi_tilde = phi + e;
  p.Delta = e.transpose() * phi + phi.transpose() * e + e.transpose() * e;
  const double e_norm = spectral_norm(e);
  const double phi_norm = spectral_norm(phi);
  p.D = 2.0 * e_norm * phi_norm + e_norm * e_norm;

  const Matrix pinv = pseudoinverse(phi);
  p.pinv_norm = 1.0 / singular_extremes(phi).min;
  const double p2 = p.pinv_norm * p.pinv_norm;
  p.rho = p.D * p2;
  if (!(p.rho < 1.0)) {
    std::ostringstream msg;
    msg << "matrix_perturbation: Neumann series diverges, rho = D ||Phi^+||^2 = " << p.rho
        << " must be < 1 (||E|| too large)";
    throw InvalidArgument(msg.str());
  }
  p.tail_estimate = std::pow(p.rho, series_order + 1) / (1.0 - p.rho);

  const Matrix g = pinv * pinv.transpose();
  const Matrix dg = p.Delta * g;
  Matrix term = g;
  p.S_Phi = Matrix::Zero(phi.cols(), phi.cols());
  for (int k = 1; k <= series_order; ++k) {
    term = -(term * dg);
    p.S_Phi += term;
  }
  p.F_transpose = g * e.transpose() + p.S_Phi * phi.transpose() + p.S_Phi * e.transpose();

  const double delta_norm = spectral_norm(p.Delta);
  p.S_Phi_norm = spectral_norm(p.S_Phi);
  p.S_Phi_bound = p.D * p2 * p2 / (1.0 - p.rho);
  p.F_norm = spectral_norm(p.F_transpose);
  p.F_bound = e_norm * p2 + p.S_Phi_bound * (phi_norm + e_norm);

  const auto check = [](double value, double bound, const char* what) {
    if (value > bound * (1.0 + kBoundSlack) + 1e-300) {
      std::ostringstream msg;
      msg << "matrix_perturbation: " << what << " = " << value << " exceeds its bound " << bound;
      throw BoundViolation(msg.str());
    }
  };
  check(delta_norm, p.D, "||Delta||");
  check(p.S_Phi_norm, p.S_Phi_bound, "||S_Phi||");
  check(p.F_norm, p.F_bound, "||F||");
  return p;
}

}  // namespace dualsr
