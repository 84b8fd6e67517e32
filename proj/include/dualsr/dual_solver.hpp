#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "dualsr/errors.hpp"
#include "dualsr/kernel.hpp"
#include "dualsr/model.hpp"
#include "dualsr/numerics.hpp"

namespace dualsr {

/// Exchange-method settings for the dual program
///   max y.lambda  s.t.  sum_j lambda_j phi(t - s_j) <= 1  for all t in [0, 1].
struct ExchangeOptions {
  std::size_t initial_grid_size = 64;
  double feasibility_tol = 1e-9;
  int max_outer_iterations = 200;
  /// Newton polish of violation points (otherwise the coarse grid point is used).
  bool refinement = true;
  /// Final local-reduction step: recompute the active points and multipliers
  /// by Gauss-Newton and re-solve lambda on the LP vertex's support so that
  /// q(t_k) = 1 and q'(t_k) = 0 hold to rounding.
  bool local_reduction = true;
  /// Weight of the ||lambda||_1 term in each restricted LP, relative to max|y|.
  /// Selects the smallest-norm vertex among (near-)optimal ones.
  double norm_penalty = 1e-8;
  /// Symmetric variable box; 0 selects 1e6 / sigma.
  double box = 0.0;
  std::size_t verification_grid = 100001;

  void validate() const;
};

struct TraceRecord {
  int iteration = 0;
  /// y . lambda of the restricted LP solution.
  double objective = 0.0;
  /// Penalised restricted-LP optimum; non-increasing across iterations.
  double restricted_optimum = 0.0;
  std::size_t exchange_size = 0;
  double max_violation = 0.0;
};

struct DualSolution {
  Vector lambda;
  std::vector<double> constraint_points;
  /// y . lambda for the stored lambda.
  double objective = 0.0;
  /// y . lambda of the last restricted LP solution.
  double restricted_objective = 0.0;
  /// max(0, sup_I q - 1) on the verification grid.
  double max_violation = 0.0;
  int iterations = 0;
  bool reduced = false;
  bool monotone = true;
  LpStatus final_status = LpStatus::optimal;
  std::vector<TraceRecord> trace;
};

/// Raised when the exchange loop exhausts max_outer_iterations.
class ExchangeDidNotConverge : public NonConvergence {
 public:
  ExchangeDidNotConverge(const std::string& what, DualSolution best)
      : NonConvergence(what), best_(std::move(best)) {}
  const DualSolution& best() const noexcept { return best_; }

 private:
  DualSolution best_;
};

struct Violation {
  double point = 0.0;
  double excess = 0.0;
};

/// Local maximizers t of q_lambda on [0, 1] with q_lambda(t) > 1 + tol.
/// Search grid has max(1000, 50 M) points unless `grid_size` is given.
std::vector<Violation> find_violations(const Vector& lambda, const SamplingDesign& design,
                                       const GaussianKernel& kernel, double tol,
                                       bool polish = true, std::size_t grid_size = 0);

DualSolution solve(const Measurements& y, const SamplingDesign& design,
                   const GaussianKernel& kernel, const ExchangeOptions& options = {});

/// Writes `iteration,objective,restricted_optimum,exchange_size,max_violation` rows.
void write_trace(std::ostream& out, const std::vector<TraceRecord>& trace, char separator = ',');

}  // namespace dualsr
