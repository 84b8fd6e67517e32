#pragma once

#include <cmath>
#include <algorithm>
#include <limits>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dualsr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct VariableBound {
  double lower;
  double upper;
};

/// maximize objective . x  subject to  constraint_matrix x <= rhs,
/// bounds[i].lower <= x_i <= bounds[i].upper.
///
/// An empty `bounds` means every variable lives in [-box, box]. The box keeps
/// restricted subproblems bounded; a solution touching it is reported as
/// LpStatus::box_active.
struct LpProblem {
  Vector objective;
  Matrix constraint_matrix;
  Vector rhs;
  std::vector<VariableBound> bounds;
  double box = 1e6;

  void validate() const;
  VariableBound bound(Eigen::Index i) const;
};

enum class LpStatus { optimal, infeasible, box_active };

const char* to_string(LpStatus status) noexcept;

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Vector x;
  double objective = -std::numeric_limits<double>::infinity();
  /// Multipliers of the general constraints (non-negative at optimum).
  Vector constraint_duals;
  int pivots = 0;
};

/// Dense two-phase bounded-variable revised simplex. Dantzig pricing with a
/// Harris ratio test; switches to Bland's rule after a run of degenerate
/// pivots so it cannot cycle. Deterministic. The basic solution and duals are
/// recomputed from the original data by an LU solve on the final basis.
LpResult lp_solve(const LpProblem& problem);

/// argmin ||A x - b||_2 via column-pivoted Householder QR.
/// Throws IllPosed when sigma_min(A) < 1e-12 sigma_max(A) or rows < cols.
Vector least_squares(const Matrix& a, const Vector& b);

struct SingularExtremes {
  double min;
  double max;
};

SingularExtremes singular_extremes(const Matrix& a);

/// Spectral norm (largest singular value); 0 for an empty matrix.
double spectral_norm(const Matrix& a);

/// (A^T A)^{-1} A^T for full-column-rank A. Throws IllPosed otherwise.
Matrix pseudoinverse(const Matrix& a);

/// Relative rank threshold shared by least_squares and pseudoinverse.
inline constexpr double kRankTolerance = 1e-12;

struct RootResult {
  double x;
  int iterations;
  bool converged;
};

/// Newton's method on a bracketed root of f, falling back to bisection
/// whenever the Newton step leaves the bracket or stalls.
///
/// `f_df(x)` returns {f(x), f'(x)}. Requires f(lo) and f(hi) of opposite
/// sign, or one of them within f_tol of zero (that endpoint is returned).
/// Converges when |f| <= f_tol or the bracket shrinks to a few ulps.
template <class FDf>
RootResult safeguarded_newton(FDf&& f_df, double lo, double hi, double x0, double f_tol,
                              int max_iter = 100) {
  auto [flo, dlo] = f_df(lo);
  auto [fhi, dhi] = f_df(hi);
  (void)dlo;
  (void)dhi;
  if (std::abs(flo) <= f_tol) return {lo, 0, true};
  if (std::abs(fhi) <= f_tol) return {hi, 0, true};
  if ((flo > 0.0) == (fhi > 0.0)) return {x0, 0, false};
  // Orient so that f(a) < 0 < f(b).
  double a = flo < 0.0 ? lo : hi;
  double b = flo < 0.0 ? hi : lo;
  double x = (x0 > std::min(lo, hi) && x0 < std::max(lo, hi)) ? x0 : 0.5 * (lo + hi);
  double dx_old = std::abs(hi - lo);
  double dx = dx_old;
  double f = 0.0;
  double df = 0.0;
  std::tie(f, df) = f_df(x);
  for (int it = 1; it <= max_iter; ++it) {
    if (std::abs(f) <= f_tol) return {x, it - 1, true};
    const bool newton_leaves = ((x - b) * df - f) * ((x - a) * df - f) > 0.0;
    const bool newton_slow = std::abs(2.0 * f) > std::abs(dx_old * df);
    dx_old = dx;
    if (newton_leaves || newton_slow || df == 0.0) {
      dx = 0.5 * (b - a);
      x = a + dx;
    } else {
      dx = f / df;
      x -= dx;
    }
    const double width = std::abs(b - a);
    if (width <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
      return {x, it, true};
    }
    std::tie(f, df) = f_df(x);
    if (f < 0.0) {
      a = x;
    } else {
      b = x;
    }
    if (dx == 0.0) return {x, it, true};
  }
  return {x, max_iter, std::abs(f) <= f_tol};
}

}  // namespace dualsr
