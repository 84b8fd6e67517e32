#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dualsr/bounds.hpp"
#include "dualsr/certificate.hpp"
#include "dualsr/dual_solver.hpp"
#include "dualsr/model.hpp"

namespace dualsr {

struct StudyConfig {
  InstanceConfig instance;
  /// Seed for generate_instance when no explicit spikes are given.
  std::uint64_t instance_seed = 7;
  /// Explicit spikes; when non-empty they replace the generated signal and
  /// only m, sigma, sampling and margin are taken from `instance`.
  std::vector<double> locations;
  std::vector<double> amplitudes;
  ExchangeOptions solver;
  std::size_t trial_count = 1000;
  /// Fractions of delta_lambda (location study) or of the admissible radius
  /// (amplitude study), sorted ascending, each in [0, 1].
  std::vector<double> radius_fractions{0.5};
  std::uint64_t seed = 1;
  int series_order = 30;

  void validate() const;
};

/// The instance described by a study configuration.
Instance build_instance(const StudyConfig& config);

enum class TrialStatus { ok, bound_exceeded, basin_escape, e_bound_violated, expansion_mismatch };

const char* to_string(TrialStatus status) noexcept;

struct TrialRecord {
  std::size_t trial = 0;
  std::size_t spike = 0;
  double fraction = 0.0;
  double perturbation_norm = 0.0;
  double measured_error = 0.0;
  double theoretical_bound = 0.0;
  /// measured_error / theoretical_bound (0 when both vanish).
  double ratio = 0.0;
  bool admissible = false;
  TrialStatus status = TrialStatus::ok;

  // Amplitude study only.
  double expansion_error = 0.0;
  double e_frobenius = 0.0;
  double e_frobenius_bound = 0.0;
  double neumann_rho = 0.0;
};

/// Interior maximizer of q_lambda near t_init: a root of F(t) = q'(t) with
/// |F| <= 1e-13 max(1, sum_j |lambda_j phi'(t - s_j)|) and q''(t) < 0.
/// Throws BasinEscape if no bracket is found within sigma of t_init, the
/// safeguard budget is exhausted, or the root is not a maximizer.
double track_maximizer(const Vector& lambda, const SamplingDesign& design,
                       const GaussianKernel& kernel, double t_init);

/// d t / d lambda = -phi'(t - s_j) / q''(t) for j = 1..M.
/// Throws InvalidArgument if |q'(t)| > 1e-10 and IllPosed if |q''(t)| < 1e-14.
Vector implicit_derivative(const Vector& lambda, double t, const SamplingDesign& design,
                           const GaussianKernel& kernel);

struct DerivativeCheck {
  double finite_difference = 0.0;
  double analytic = 0.0;
  double relative_error = 0.0;
};

/// Central difference (t(lambda + h u) - t(lambda - h u)) / 2h against
/// u . dt/dlambda. The relative error is taken against
/// max(|analytic|, 1e-3 ||dt/dlambda||) so that directions nearly orthogonal
/// to the gradient do not divide by zero.
DerivativeCheck check_implicit_derivative(const Vector& lambda, double t,
                                          const SamplingDesign& design,
                                          const GaussianKernel& kernel, const Vector& direction,
                                          double step = 1e-6);

/// Uniform direction on the unit sphere of R^n from (seed, stream).
Vector random_unit_vector(std::size_t n, std::uint64_t seed, std::uint64_t stream);

/// Solved and certified instance shared by the studies.
struct ReferenceSolution {
  Instance instance;
  DualSolution dual;
  SpikeTrain recovered;
};

/// solve + extract_spikes; throws if the certificate is invalid.
ReferenceSolution solve_reference(const Instance& instance, const ExchangeOptions& options);

struct LocationStudy {
  std::vector<LocationBoundReport> reports;
  std::vector<TrialRecord> records;
  std::size_t violations = 0;
  std::size_t escapes = 0;
  bool passed() const noexcept { return violations == 0 && escapes == 0; }
};

/// Perturbs lambda* by fraction * delta_lambda along random unit directions and
/// tracks every spike's maximizer. Records are ordered by (spike, fraction, trial).
LocationStudy run_location_study(const ReferenceSolution& ref, const StudyConfig& config);
LocationStudy run_location_study(const StudyConfig& config);

struct AmplitudeStudy {
  AmplitudeBoundReport report;
  std::vector<TrialRecord> records;
  std::size_t e_bound_violations = 0;
  /// Largest |ratio - 1| excess over the 1 + 100 eps allowance.
  double worst_first_order_excess = 0.0;
  double worst_expansion_error = 0.0;
};

/// Uses the ground-truth t*, a* of the instance. Throws InvalidArgument when
/// the coefficients overflow or the largest perturbation is below double
/// resolution of the locations.
AmplitudeStudy run_amplitude_study(const Instance& instance, const StudyConfig& config);
AmplitudeStudy run_amplitude_study(const StudyConfig& config);

/// Allowed measured / first-order-bound ratio at perturbation size eps.
inline double first_order_allowance(double eps) { return 1.0 + 100.0 * eps; }

/// Expansion agreement required when the Neumann ratio is at most 0.1.
inline constexpr double kExpansionTol = 1e-9;

struct ScalingRow {
  std::size_t M = 0;
  std::size_t spike = 0;
  double max_ratio = 0.0;
  /// Largest |t - t*| / ||lambda - lambda*|| over the trials.
  double max_error_per_unit = 0.0;
  double C_tstar = 0.0;
  double C_tstar_m_term = 0.0;
  double delta_lambda = 0.0;
  double q2 = 0.0;
  double R = 0.0;
};

struct ScalingFit {
  std::size_t spike = 0;
  double delta_lambda_slope = 0.0;
  double c_term_slope = 0.0;
  double c_tstar_slope = 0.0;
};

struct ScalingStudy {
  std::vector<ScalingRow> rows;
  /// Empty when fewer than two distinct M values were given.
  std::vector<ScalingFit> fits;
};

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

ScalingStudy scaling_study(const std::vector<StudyConfig>& configs);

/// Random Gaussian E scaled so that ||E||_2 ||pinv(Phi)||_2 = ratio.
Matrix scaled_perturbation(const Matrix& phi, double ratio, std::uint64_t seed);

struct NeumannCheck {
  /// Perturbation data at the largest order.
  PerturbationMatrices matrices;
  /// errors[n - 1] = ||pinv(Phi + E) - (pinv(Phi) + F_n^T)||_2 for orders n = 1..N.
  std::vector<double> errors;
  /// ||pinv(Phi)||^2 rho^{n+1} / (1 - rho) ||Phi + E||_2, the truncation bound at order n.
  std::vector<double> bounds;
  /// True when every error is within its bound (relative slack kBoundSlack, absolute 1e-14).
  bool within_bounds = true;
};

/// Truncation error of the series expansion of pinv(Phi + E) for orders 1..series_order.
NeumannCheck verify_neumann(const Matrix& phi, const Matrix& e, int series_order);

void write_location_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_amplitude_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_scaling_csv(std::ostream& out, const ScalingStudy& study);

}  // namespace dualsr
