#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "dualsr/kernel.hpp"
#include "dualsr/model.hpp"

namespace dualsr {

/// q(s) = sum_j lambda_j phi(s - s_j) together with its derivatives.
class DualCertificate {
 public:
  DualCertificate(Vector lambda, SamplingDesign design, GaussianKernel kernel);

  const Vector& lambda() const noexcept { return lambda_; }
  const SamplingDesign& design() const noexcept { return design_; }
  const GaussianKernel& kernel() const noexcept { return kernel_; }

  /// Weighted sum of kernel derivatives of the given order (0..3, unchecked).
  double q(double s, int order = 0) const noexcept;

  /// {q, q', q''} at s in one pass.
  std::array<double, 3> q012(double s) const noexcept;

  bool is_zero() const noexcept { return lambda_.cwiseAbs().maxCoeff() == 0.0; }

 private:
  Vector lambda_;
  SamplingDesign design_;
  GaussianKernel kernel_;
};

/// Checked entry point: order must be 0, 1 or 2.
double q_eval(const DualCertificate& cert, double s, int order);

struct Maximizer {
  double location = 0.0;
  double q_value = 0.0;
  double q_first = 0.0;
  double q_second = 0.0;
  /// True for a one-sided maximum at 0 or 1 (q' does not vanish there).
  bool boundary = false;
};

/// Absolute tolerance on |q'| at a polished interior maximizer.
inline constexpr double kStationarityTol = 1e-12;
/// Maximizers closer than this are merged.
inline constexpr double kMergeTol = 1e-10;

/// Polishes the maximizer bracketed by [lo, hi], where q'(lo) > 0 > q'(hi).
std::optional<Maximizer> polish_maximizer(const DualCertificate& cert, double lo, double hi);

/// All local maximizers of q on [0, 1], seeded from sign changes of q' on a
/// uniform grid of `seed_grid_size` points. Sorted by location.
/// Throws InvalidArgument if lambda is identically zero.
std::vector<Maximizer> local_maximizers(const DualCertificate& cert, std::size_t seed_grid_size);

struct CertificateReport {
  std::vector<Maximizer> maximizers;
  /// Maximizers with q >= 1 - spike_tol.
  std::vector<Maximizer> spikes;
  double eq_violation = 0.0;
  double strict_margin = 1.0;
  /// sup of q over [0, 1] (grid plus polished maximizers).
  double sup_q = 0.0;
  double neighborhood_radius = 0.0;
  std::size_t grid_size = 0;
  double spike_tol = 0.0;
  double strict_tol = 0.0;
  bool valid = false;
};

inline constexpr std::size_t kDefaultVerificationGrid = 100001;

/// Checks q(t_i) = 1 at spike candidates and q < 1 away from them.
///
/// q < 1 can only be certified up to grid resolution: strict_margin is
/// 1 - sup q over [0, 1] minus the radius-sigma/4 neighbourhoods of the
/// candidates. The certificate is valid iff eq_violation <= spike_tol and
/// strict_margin > strict_tol.
CertificateReport verify_conditions(const DualCertificate& cert, double spike_tol = 1e-6,
                                    double strict_tol = 0.0,
                                    std::size_t grid_size = kDefaultVerificationGrid);

/// Spike locations from the certificate, amplitudes by least squares.
/// Throws InvalidArgument for an invalid certificate and IllPosed for a
/// non-positive amplitude or a rank-deficient Phi.
SpikeTrain extract_spikes(const DualCertificate& cert, const Measurements& y,
                          double spike_tol = 1e-6);

}  // namespace dualsr
