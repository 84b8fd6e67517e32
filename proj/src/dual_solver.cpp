#include "dualsr/dual_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

#include "dualsr/certificate.hpp"

namespace dualsr {

void ExchangeOptions::validate() const {
  if (initial_grid_size < 2) throw InvalidArgument("initial_grid_size: must be >= 2");
  if (!(feasibility_tol > 0.0)) throw InvalidArgument("feasibility_tol: must be positive");
  if (max_outer_iterations < 1) throw InvalidArgument("max_outer_iterations: must be >= 1");
  if (!(norm_penalty >= 0.0) || !std::isfinite(norm_penalty)) {
    throw InvalidArgument("norm_penalty: must be finite and >= 0");
  }
  if (!(box >= 0.0) || !std::isfinite(box)) throw InvalidArgument("box: must be finite and >= 0");
  if (verification_grid < 2) throw InvalidArgument("verification_grid: must be >= 2");
}

std::vector<Violation> find_violations(const Vector& lambda, const SamplingDesign& design,
                                       const GaussianKernel& kernel, double tol, bool polish,
                                       std::size_t grid_size) {
  if (lambda.size() == 0 || lambda.cwiseAbs().maxCoeff() == 0.0) return {};
  const DualCertificate cert(lambda, design, kernel);
  const std::size_t n =
      grid_size > 0 ? grid_size : std::max<std::size_t>(1000, 50 * design.size());

  std::vector<Violation> out;
  const auto add = [&](double x, double q) {
    if (q > 1.0 + tol) out.push_back({x, q - 1.0});
  };

  if (polish) {
    for (const Maximizer& m : local_maximizers(cert, n)) add(m.location, m.q_value);
  } else {
    std::vector<double> q(n);
    const double h = 1.0 / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) q[i] = cert.q(h * static_cast<double>(i), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const bool left = i == 0 || q[i] >= q[i - 1];
      const bool right = i + 1 == n || q[i] >= q[i + 1];
      if (left && right) add(i + 1 == n ? 1.0 : h * static_cast<double>(i), q[i]);
    }
  }
  // Endpoints are always candidates.
  for (double x : {0.0, 1.0}) {
    const bool present = std::any_of(out.begin(), out.end(),
                                     [x](const Violation& v) { return v.point == x; });
    if (!present) add(x, cert.q(x, 0));
  }
  std::sort(out.begin(), out.end(),
            [](const Violation& a, const Violation& b) { return a.point < b.point; });
  return out;
}

namespace {

double sup_violation(const Vector& lambda, const SamplingDesign& design,
                     const GaussianKernel& kernel, std::size_t grid) {
  if (lambda.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const DualCertificate cert(lambda, design, kernel);
  double sup = std::max(cert.q(0.0, 0), cert.q(1.0, 0));
  for (const Maximizer& m : local_maximizers(cert, grid)) sup = std::max(sup, m.q_value);
  return std::max(0.0, sup - 1.0);
}

struct ActivePoint {
  double location;
  double weight;
};

// Groups the positive LP multipliers into clusters separated by more than `gap`.
std::vector<ActivePoint> cluster_multipliers(const std::vector<double>& points, const Vector& mu,
                                             double gap) {
  std::vector<std::pair<double, double>> support;
  const double scale = mu.size() > 0 ? mu.maxCoeff() : 0.0;
  if (!(scale > 0.0)) return {};
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (mu(i) > 1e-10 * scale) support.emplace_back(points[static_cast<std::size_t>(i)], mu(i));
  }
  std::sort(support.begin(), support.end());
  std::vector<ActivePoint> clusters;
  double wsum = 0.0;
  double tsum = 0.0;
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& [t, w] : support) {
    if (t - last > gap && wsum > 0.0) {
      clusters.push_back({tsum / wsum, wsum});
      wsum = 0.0;
      tsum = 0.0;
    }
    wsum += w;
    tsum += w * t;
    last = t;
  }
  if (wsum > 0.0) clusters.push_back({tsum / wsum, wsum});
  // Points where q merely touches 1 carry negligible primal weight.
  double total = 0.0;
  for (const ActivePoint& c : clusters) total += c.weight;
  std::erase_if(clusters, [&](const ActivePoint& c) { return c.weight < 1e-6 * total; });
  return clusters;
}

// Gauss-Newton on sum_k a_k phi(t_k - s_j) = y_j. Returns false if the
// iterate leaves [0, 1] or an amplitude becomes non-positive.
bool refine_active_points(std::vector<double>& t, std::vector<double>& a, const Vector& y,
                          const SamplingDesign& design, const GaussianKernel& kernel) {
  const auto k = static_cast<Eigen::Index>(t.size());
  if (2 * k > static_cast<Eigen::Index>(design.size())) return false;
  const auto residual = [&](const std::vector<double>& tt, const std::vector<double>& aa) {
    const Matrix phi = phi_matrix(tt, design, kernel);
    const Eigen::Map<const Vector> av(aa.data(), k);
    return Vector(phi * av - y);
  };
  Vector r = residual(t, a);
  const double y_scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  for (int it = 0; it < 60; ++it) {
    if (r.norm() <= 1e-15 * y_scale) break;
    const Matrix phi = phi_matrix(t, design, kernel);
    Matrix jac(phi.rows(), 2 * k);
    jac.leftCols(k) = phi_derivative_matrix(t, design, kernel) *
                      Eigen::Map<const Vector>(a.data(), k).asDiagonal();
    jac.rightCols(k) = phi;
    const Vector step = jac.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) return false;
    double alpha = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half) {
      std::vector<double> tn(t);
      std::vector<double> an(a);
      for (Eigen::Index i = 0; i < k; ++i) {
        tn[static_cast<std::size_t>(i)] += alpha * step(i);
        an[static_cast<std::size_t>(i)] += alpha * step(k + i);
      }
      const Vector rn = residual(tn, an);
      if (rn.norm() < r.norm()) {
        t = std::move(tn);
        a = std::move(an);
        r = rn;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
    if (alpha * step.norm() <= 1e-16) break;
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] >= 0.0 && t[i] <= 1.0) || !(a[i] > 0.0)) return false;
    if (i > 0 && !(t[i] > t[i - 1])) return false;
  }
  return r.norm() <= 1e-9 * y_scale;
}

// Smallest correction of `base`, supported on `support`, after which
// q(t_k) = 1 and q'(t_k) = 0 hold (the derivative condition is dropped at an
// endpoint of I).
std::optional<Vector> correct_on_support(const Vector& base, const std::vector<double>& t,
                                         const std::vector<Eigen::Index>& support,
                                         const SamplingDesign& design,
                                         const GaussianKernel& kernel) {
  std::vector<std::pair<double, int>> rows;
  for (double tk : t) {
    rows.emplace_back(tk, 0);
    if (tk > 0.0 && tk < 1.0) rows.emplace_back(tk, 1);
  }
  const auto samples = design.samples();
  const auto nrows = static_cast<Eigen::Index>(rows.size());
  Matrix a(nrows, static_cast<Eigen::Index>(support.size()));
  Vector rhs(nrows);
  const DualCertificate cert(base, design, kernel);
  for (Eigen::Index r = 0; r < nrows; ++r) {
    const auto [tk, order] = rows[static_cast<std::size_t>(r)];
    rhs(r) = (order == 0 ? 1.0 : 0.0) - cert.q(tk, order);
    for (std::size_t c = 0; c < support.size(); ++c) {
      a(r, static_cast<Eigen::Index>(c)) =
          kernel.derivative_unchecked(tk - samples[static_cast<std::size_t>(support[c])], order);
    }
  }
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  const Vector step = cod.solve(rhs);
  if (!step.allFinite() || (a * step - rhs).cwiseAbs().maxCoeff() > 1e-10) return std::nullopt;
  Vector lambda = base;
  for (std::size_t c = 0; c < support.size(); ++c) {
    lambda(support[c]) += step(static_cast<Eigen::Index>(c));
  }
  return lambda;
}

std::optional<Vector> local_reduction(const Vector& lambda_lp, const std::vector<double>& points,
                                      const Vector& duals, const Vector& y,
                                      const SamplingDesign& design, const GaussianKernel& kernel,
                                      const ExchangeOptions& options) {
  const std::vector<ActivePoint> clusters =
      cluster_multipliers(points, duals, kernel.sigma() / 4.0);
  if (clusters.empty()) return std::nullopt;
  std::vector<double> t;
  std::vector<double> a;
  for (const ActivePoint& p : clusters) {
    t.push_back(std::clamp(p.location, 0.0, 1.0));
    a.push_back(p.weight);
  }
  if (!refine_active_points(t, a, y, design, kernel)) return std::nullopt;

  const Eigen::Index m = lambda_lp.size();
  const double lmax = lambda_lp.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> lp_support;
  std::vector<Eigen::Index> all(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    all[static_cast<std::size_t>(j)] = j;
    if (std::abs(lambda_lp(j)) > 1e-12 * lmax) lp_support.push_back(j);
  }
  for (const auto* support : {&lp_support, &all}) {
    const auto candidate = correct_on_support(lambda_lp, t, *support, design, kernel);
    if (!candidate) continue;
    const auto bad = find_violations(*candidate, design, kernel, options.feasibility_tol, true,
                                     options.verification_grid);
    if (bad.empty()) return candidate;
  }
  return std::nullopt;
}

}  // namespace

DualSolution solve(const Measurements& y, const SamplingDesign& design,
                   const GaussianKernel& kernel, const ExchangeOptions& options) {
  options.validate();
  if (y.size() != design.size()) {
    throw InvalidArgument("solve: measurement length differs from the number of samples");
  }
  const Vector yv = y.as_vector();
  const auto m = static_cast<Eigen::Index>(design.size());
  const double box = options.box > 0.0 ? options.box : 1e6 / kernel.sigma();
  const double y_scale = yv.cwiseAbs().maxCoeff();
  const double eps = options.norm_penalty * (y_scale > 0.0 ? y_scale : 1.0);
  const auto samples = design.samples();

  std::vector<double> points;
  {
    const std::size_t n0 = options.initial_grid_size;
    for (std::size_t i = 0; i < n0; ++i) {
      points.push_back(i + 1 == n0 ? 1.0 : static_cast<double>(i) / static_cast<double>(n0 - 1));
    }
  }

  // lambda = p - q with p, q in [0, box]; objective y.lambda - eps ||lambda||_1.
  LpProblem lp;
  lp.box = box;
  lp.objective.resize(2 * m);
  lp.objective.head(m) = yv.array() - eps;
  lp.objective.tail(m) = -yv.array() - eps;
  lp.bounds.assign(static_cast<std::size_t>(2 * m), VariableBound{0.0, box});

  DualSolution sol;
  LpResult res;
  double previous = std::numeric_limits<double>::infinity();
  bool converged = false;

  for (int it = 1; it <= options.max_outer_iterations; ++it) {
    const auto rows = static_cast<Eigen::Index>(points.size());
    lp.constraint_matrix.resize(rows, 2 * m);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const double v = kernel.eval(points[static_cast<std::size_t>(r)] - samples[static_cast<std::size_t>(j)]);
        lp.constraint_matrix(r, j) = v;
        lp.constraint_matrix(r, m + j) = -v;
      }
    }
    lp.rhs = Vector::Ones(rows);
    res = lp_solve(lp);
    if (res.status == LpStatus::infeasible) {
      // lambda = 0 is always feasible; reaching this is a solver defect.
      throw Error("solve: restricted LP reported infeasible");
    }

    const Vector lambda = res.x.head(m) - res.x.tail(m);
    if (!lambda.allFinite()) throw ExchangeDidNotConverge("solve: restricted LP returned non-finite multipliers", sol);
    const double penalised = res.objective;
    if (penalised > previous + 1e-9 * std::max(1.0, std::abs(previous))) sol.monotone = false;
    previous = std::min(previous, penalised);

    std::vector<Violation> viol = find_violations(lambda, design, kernel, options.feasibility_tol,
                                                  options.refinement);
    if (viol.empty()) {
      viol = find_violations(lambda, design, kernel, options.feasibility_tol, true,
                             options.verification_grid);
    }
    double worst = 0.0;
    for (const Violation& v : viol) worst = std::max(worst, v.excess);

    sol.lambda = lambda;
    sol.objective = yv.dot(lambda);
    sol.restricted_objective = sol.objective;
    sol.constraint_points = points;
    sol.max_violation = worst;
    sol.iterations = it;
    sol.final_status = res.status;
    sol.trace.push_back({it, sol.objective, penalised, points.size(), worst});

    if (viol.empty()) {
      converged = true;
      break;
    }
    std::size_t added = 0;
    for (const Violation& v : viol) {
      const bool known = std::any_of(points.begin(), points.end(), [&](double p) {
        return std::abs(p - v.point) <= 1e-14;
      });
      if (!known) {
        points.push_back(v.point);
        ++added;
      }
    }
    if (added == 0 && worst <= 1e3 * options.feasibility_tol) {
      // Violations sit on existing constraints at LP rounding level; scaling restores feasibility.
      const Vector scaled = lambda / (1.0 + worst);
      const std::vector<Violation> left = find_violations(
          scaled, design, kernel, options.feasibility_tol, true, options.verification_grid);
      if (left.empty()) {
        sol.lambda = scaled;
        sol.objective = yv.dot(scaled);
        sol.restricted_objective = sol.objective;
        sol.max_violation = 0.0;
        converged = true;
        break;
      }
    }
    if (added == 0) {
      throw ExchangeDidNotConverge(
          "solve: violated points are already in the exchange set (LP accuracy floor reached)",
          sol);
    }
  }
  if (!converged) {
    throw ExchangeDidNotConverge("solve: max_outer_iterations exceeded with max violation " +
                                     std::to_string(sol.max_violation),
                                 sol);
  }

  if (options.local_reduction && y_scale > 0.0) {
    if (auto reduced = local_reduction(sol.lambda, points, res.constraint_duals, yv, design,
                                       kernel, options)) {
      sol.lambda = *reduced;
      sol.objective = yv.dot(sol.lambda);
      sol.reduced = true;
    }
  }
  sol.max_violation = sup_violation(sol.lambda, design, kernel, options.verification_grid);
  return sol;
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& trace, char separator) {
  out << "iteration" << separator << "objective" << separator << "restricted_optimum" << separator
      << "exchange_size" << separator << "max_violation\n";
  const auto old = out.precision(17);
  for (const TraceRecord& r : trace) {
    out << r.iteration << separator << r.objective << separator << r.restricted_optimum
        << separator << r.exchange_size << separator << r.max_violation << '\n';
  }
  out.precision(old);
}

}  // namespace dualsr
