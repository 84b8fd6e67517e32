#include "dualsr/kernel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dualsr/errors.hpp"

namespace dualsr {

GaussianKernel::GaussianKernel(double sigma) : sigma_(sigma), inv_sigma2_(0.0) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("GaussianKernel: sigma must be positive and finite, got " +
                          std::to_string(sigma));
  }
  inv_sigma2_ = 1.0 / (sigma * sigma);
}

double GaussianKernel::eval(double t) const noexcept {
  return std::exp(-t * t * inv_sigma2_);
}

double GaussianKernel::derivative_unchecked(double t, int order) const noexcept {
  const double g = eval(t);
  const double s2 = inv_sigma2_;
  switch (order) {
    case 0:
      return g;
    case 1:
      return -2.0 * t * s2 * g;
    case 2:
      return (4.0 * t * t * s2 * s2 - 2.0 * s2) * g;
    case 3:
      return (12.0 * t * s2 * s2 - 8.0 * t * t * t * s2 * s2 * s2) * g;
    default:
      return 0.0;
  }
}

double GaussianKernel::deriv(double t, int order) const {
  if (order < 1 || order > 3) {
    throw InvalidArgument("GaussianKernel::deriv: order must be 1, 2 or 3, got " +
                          std::to_string(order));
  }
  return derivative_unchecked(t, order);
}

double GaussianKernel::sup_abs_deriv(int order) const {
  switch (order) {
    case 0:
      return 1.0;
    case 1:
      // |phi'| peaks at t = sigma / sqrt(2).
      return std::numbers::sqrt2 / (sigma_ * std::sqrt(std::numbers::e));
    case 2:
      return 2.0 * inv_sigma2_;
    default:
      throw InvalidArgument("GaussianKernel::sup_abs_deriv: order must be 0, 1 or 2, got " +
                            std::to_string(order));
  }
}

}  // namespace dualsr
