#pragma once

namespace dualsr {

/// Gaussian point-spread function phi(t) = exp(-t^2 / sigma^2).
///
/// Derivatives are closed forms. The global suprema of |phi|, |phi'| and
/// |phi''| are returned analytically (attained at t = 0, t = sigma/sqrt(2)
/// and t = 0 respectively).
class GaussianKernel {
 public:
  explicit GaussianKernel(double sigma);

  double sigma() const noexcept { return sigma_; }

  double eval(double t) const noexcept;

  /// Derivative of order 1, 2 or 3. Any other order throws InvalidArgument.
  double deriv(double t, int order) const;

  /// sup over the real line of |phi^(order)| for order 0, 1 or 2.
  double sup_abs_deriv(int order) const;

  /// Value (order 0) or derivative (orders 1..3) without the order check
  /// overhead of deriv(); order outside 0..3 returns 0.
  double derivative_unchecked(double t, int order) const noexcept;

 private:
  double sigma_;
  double inv_sigma2_;
};

/// sup_t |phi'''(t)| for the unit-width Gaussian; sup |phi'''| scales as
/// this constant over sigma^3.
inline constexpr double kUniversalConstant = 3.9036;

}  // namespace dualsr
