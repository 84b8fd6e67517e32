#include "dualsr/numerics.hpp"

#include <algorithm>
#include <sstream>

#include "dualsr/errors.hpp"

namespace dualsr {

void LpProblem::validate() const {
  const Eigen::Index n = objective.size();
  if (constraint_matrix.cols() != n && constraint_matrix.rows() > 0) {
    throw InvalidArgument("LpProblem: constraint_matrix has wrong column count");
  }
  if (constraint_matrix.rows() != rhs.size()) {
    throw InvalidArgument("LpProblem: rhs length differs from constraint count");
  }
  if (!(box > 0.0) || !std::isfinite(box)) {
    throw InvalidArgument("LpProblem: box must be finite and positive");
  }
  if (!bounds.empty() && static_cast<Eigen::Index>(bounds.size()) != n) {
    throw InvalidArgument("LpProblem: bounds length differs from variable count");
  }
  for (const auto& b : bounds) {
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || b.lower > b.upper) {
      throw InvalidArgument("LpProblem: every variable needs a finite interval lower <= upper");
    }
  }
  if (!objective.allFinite() || !constraint_matrix.allFinite() || !rhs.allFinite()) {
    throw InvalidArgument("LpProblem: non-finite data");
  }
}

VariableBound LpProblem::bound(Eigen::Index i) const {
  if (bounds.empty()) return {-box, box};
  return bounds[static_cast<std::size_t>(i)];
}

const char* to_string(LpStatus status) noexcept {
  switch (status) {
    case LpStatus::optimal:
      return "optimal";
    case LpStatus::infeasible:
      return "infeasible";
    case LpStatus::box_active:
      return "box_active";
  }
  return "unknown";
}

namespace {

enum class VarState { basic, at_lower, at_upper };

// Bounded-variable revised simplex for
//   max c.z  s.t.  A z = h,  0 <= z_j <= upper_j  (upper_j may be +inf),
// started from a given feasible basis. The basis inverse is updated by
// elementary row operations and rebuilt from A every kRefactorEvery pivots.
class RevisedSimplex {
 public:
  // Basis algebra runs in extended precision: Gaussian constraint columns make
  // the bases ill-conditioned enough that double-precision pricing misfires.
  using Real = long double;
  using MatrixR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorR = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

  RevisedSimplex(const Matrix& a, const Vector& h, const Vector& upper, std::vector<Eigen::Index> basis)
      : a_(a.cast<Real>()), h_(h.cast<Real>()), upper_(upper.cast<Real>()), basis_(std::move(basis)) {
    rows_ = a_.rows();
    cols_ = a_.cols();
    find_mirrors(a);
    state_.assign(static_cast<std::size_t>(cols_), VarState::at_lower);
    for (Eigen::Index b : basis_) state_[static_cast<std::size_t>(b)] = VarState::basic;
    refactor();
  }

  // Returns false if an improving direction is unbounded.
  // Dantzig pricing with a Harris two-pass ratio test, which prefers large
  // pivots among near-ties and keeps the bases well conditioned. After a run
  // of degenerate pivots it switches to Bland's rule (lowest index enters,
  // lowest index leaves on ties) until progress resumes, which rules out cycling.
  bool optimize(const Vector& cost, double cost_tol, int& pivots, int max_pivots) {
    constexpr double kPivotTol = 1e-11;
    constexpr double kRelativePivotTol = 1e-9;
    constexpr double kFeasTol = 1e-9;
    constexpr int kRefactorEvery = 32;
    constexpr int kDegenerateRun = 50;
    int since_refactor = 0;
    int degenerate = 0;
    while (true) {
      if (pivots >= max_pivots) throw NonConvergence("lp_solve: pivot budget exhausted");
      if (since_refactor >= kRefactorEvery) {
        refactor();
        since_refactor = 0;
      }
      const bool bland = degenerate >= kDegenerateRun;
      const VectorR xb = basic_values();
      VectorR cb(rows_);
      for (Eigen::Index r = 0; r < rows_; ++r) cb(r) = cost(basis_[static_cast<std::size_t>(r)]);
      const VectorR pi = binv_.transpose() * cb;

      Eigen::Index enter = -1;
      double dir = 0.0;
      double best_gain = 0.0;
      for (Eigen::Index j = 0; j < cols_; ++j) {
        const VarState s = state_[static_cast<std::size_t>(j)];
        if (s == VarState::basic || upper_(j) == 0) continue;
        const Eigen::Index mate = mirror_[static_cast<std::size_t>(j)];
        if (mate >= 0 && state_[static_cast<std::size_t>(mate)] == VarState::basic) {
          // Exact reduced cost c_j + c_mate: raising both leaves A z unchanged.
          // Pricing through B^{-1} would only add rounding noise.
          if (s == VarState::at_lower && cost(j) + cost(mate) <= cost_tol) continue;
          if (s == VarState::at_upper && cost(j) + cost(mate) >= -cost_tol) continue;
        }
        const auto d = static_cast<double>(cost(j) - pi.dot(a_.col(j)));
        const double gain = s == VarState::at_lower ? d : -d;
        if (gain > cost_tol && gain > best_gain) {
          enter = j;
          dir = s == VarState::at_lower ? 1.0 : -1.0;
          best_gain = gain;
          if (bland) break;
        }
      }
      if (enter < 0) return true;

      const Vector alpha = (binv_ * a_.col(enter)).cast<double>();
      const double ptol = std::max(kPivotTol, kRelativePivotTol * alpha.cwiseAbs().maxCoeff());
      // Basic variable r moves by -dir * theta * alpha(r). limit(r, slack)
      // is the step at which it reaches its bound, relaxed by `slack`.
      const auto limit_of = [&](Eigen::Index r, double slack, bool& to_upper) {
        const double rate = dir * alpha(r);
        const Eigen::Index var = basis_[static_cast<std::size_t>(r)];
        const auto x = static_cast<double>(xb(r));
        if (rate > ptol) {
          to_upper = false;
          return std::max(x + slack, 0.0) / rate;
        }
        const auto ub = static_cast<double>(upper_(var));
        if (rate < -ptol && std::isfinite(ub)) {
          to_upper = true;
          return std::max(ub - x + slack, 0.0) / -rate;
        }
        return std::numeric_limits<double>::infinity();
      };

      const auto flip = static_cast<double>(upper_(enter));
      double theta = flip;
      Eigen::Index leave = -1;
      bool leave_to_upper = false;
      if (bland) {
        for (Eigen::Index r = 0; r < rows_; ++r) {
          bool to_upper = false;
          const double limit = limit_of(r, 0.0, to_upper);
          if (!std::isfinite(limit)) continue;
          const double tie = 1e-12 * std::max(1.0, limit);
          const bool better = limit < theta - tie;
          const bool tied = limit <= theta + tie && leave >= 0 &&
                            basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)];
          if (better || tied) {
            theta = limit;
            leave = r;
            leave_to_upper = to_upper;
          }
        }
      } else {
        double bound = flip;
        for (Eigen::Index r = 0; r < rows_; ++r) {
          bool to_upper = false;
          const double tol = kFeasTol * std::max(1.0, std::abs(static_cast<double>(xb(r))));
          bound = std::min(bound, limit_of(r, tol, to_upper));
        }
        double best_rate = 0.0;
        for (Eigen::Index r = 0; r < rows_; ++r) {
          bool to_upper = false;
          const double limit = limit_of(r, 0.0, to_upper);
          const double rate = std::abs(alpha(r));
          if (limit <= bound && rate > best_rate) {
            best_rate = rate;
            theta = limit;
            leave = r;
            leave_to_upper = to_upper;
          }
        }
        if (leave >= 0 && flip <= theta) leave = -1;
        if (leave < 0) theta = flip;
      }
      if (!std::isfinite(theta)) return false;
      ++pivots;
      degenerate = theta * best_gain > 1e-14 ? 0 : degenerate + 1;
      if (leave < 0) {
        // The entering variable reaches its opposite bound first.
        state_[static_cast<std::size_t>(enter)] =
            dir > 0.0 ? VarState::at_upper : VarState::at_lower;
        continue;
      }
      const Eigen::Index out = basis_[static_cast<std::size_t>(leave)];
      state_[static_cast<std::size_t>(out)] = leave_to_upper ? VarState::at_upper : VarState::at_lower;
      state_[static_cast<std::size_t>(enter)] = VarState::basic;
      basis_[static_cast<std::size_t>(leave)] = enter;
      const VectorR alpha_r = binv_ * a_.col(enter);
      binv_.row(leave) /= alpha_r(leave);
      for (Eigen::Index r = 0; r < rows_; ++r) {
        if (r != leave && alpha_r(r) != 0.0) binv_.row(r) -= alpha_r(r) * binv_.row(leave);
      }
      ++since_refactor;
    }
  }

  void refactor() {
    MatrixR b(rows_, rows_);
    for (Eigen::Index r = 0; r < rows_; ++r) b.col(r) = a_.col(basis_[static_cast<std::size_t>(r)]);
    binv_ = b.partialPivLu().inverse();
  }

  // Values of the basic variables given the nonbasic ones at their bounds.
  VectorR basic_values() const {
    VectorR rhs = h_;
    for (Eigen::Index j = 0; j < cols_; ++j) {
      if (state_[static_cast<std::size_t>(j)] == VarState::at_upper) rhs -= upper_(j) * a_.col(j);
    }
    return binv_ * rhs;
  }

  // Full solution and row multipliers from a fresh factorization of the basis.
  void solution(const Vector& cost, Vector& z, Vector& pi) const {
    MatrixR b(rows_, rows_);
    VectorR cb(rows_);
    for (Eigen::Index r = 0; r < rows_; ++r) {
      b.col(r) = a_.col(basis_[static_cast<std::size_t>(r)]);
      cb(r) = cost(basis_[static_cast<std::size_t>(r)]);
    }
    const Eigen::PartialPivLU<MatrixR> lu(b);
    VectorR rhs = h_;
    z = Vector::Zero(cols_);
    for (Eigen::Index j = 0; j < cols_; ++j) {
      if (state_[static_cast<std::size_t>(j)] == VarState::at_upper) {
        z(j) = static_cast<double>(upper_(j));
        rhs -= upper_(j) * a_.col(j);
      }
    }
    const VectorR xb = lu.solve(rhs);
    for (Eigen::Index r = 0; r < rows_; ++r) {
      const Eigen::Index var = basis_[static_cast<std::size_t>(r)];
      z(var) = std::clamp(static_cast<double>(xb(r)), 0.0, static_cast<double>(upper_(var)));
    }
    pi = VectorR(lu.transpose().solve(cb)).cast<double>();
  }

  void fix_at_zero(Eigen::Index j) { upper_(j) = 0; }

 private:
  // Pairs of columns with a_k = -a_j (a free variable split into two parts).
  void find_mirrors(const Matrix& a) {
    mirror_.assign(static_cast<std::size_t>(cols_), -1);
    for (Eigen::Index j = 0; j < cols_; ++j) {
      if (mirror_[static_cast<std::size_t>(j)] >= 0 || a.col(j).isZero(0.0)) continue;
      for (Eigen::Index k = j + 1; k < cols_; ++k) {
        if (mirror_[static_cast<std::size_t>(k)] < 0 && a.col(k) == -a.col(j)) {
          mirror_[static_cast<std::size_t>(j)] = k;
          mirror_[static_cast<std::size_t>(k)] = j;
          break;
        }
      }
    }
  }

  MatrixR a_;
  VectorR h_;
  VectorR upper_;
  std::vector<Eigen::Index> basis_;
  std::vector<VarState> state_;
  std::vector<Eigen::Index> mirror_;
  MatrixR binv_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
};

}  // namespace

LpResult lp_solve(const LpProblem& problem) {
  problem.validate();
  const Eigen::Index n = problem.objective.size();
  const Eigen::Index m = problem.constraint_matrix.rows();
  const double inf = std::numeric_limits<double>::infinity();

  // Shift z = x - lower so every structural variable lives in [0, width].
  Vector lower(n);
  Vector width(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const VariableBound b = problem.bound(i);
    lower(i) = b.lower;
    width(i) = b.upper - b.lower;
  }
  Vector h = problem.rhs;
  if (m > 0) h -= problem.constraint_matrix * lower;

  LpResult result;
  if (m == 0) {
    // Each variable independently at its better bound.
    result.x = lower;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (problem.objective(i) > 0.0) result.x(i) += width(i);
    }
  } else {
    // Columns: structural | slacks | one artificial per row with h < 0.
    std::vector<Eigen::Index> neg;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (h(r) < 0.0) neg.push_back(r);
    }
    const auto n_art = static_cast<Eigen::Index>(neg.size());
    const Eigen::Index cols = n + m + n_art;
    Matrix a = Matrix::Zero(m, cols);
    a.leftCols(n) = problem.constraint_matrix;
    a.block(0, n, m, m).setIdentity();
    Vector upper(cols);
    upper.head(n) = width;
    upper.tail(m + n_art).setConstant(inf);
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    for (Eigen::Index r = 0; r < m; ++r) basis[static_cast<std::size_t>(r)] = n + r;
    for (Eigen::Index i = 0; i < n_art; ++i) {
      const Eigen::Index r = neg[static_cast<std::size_t>(i)];
      a(r, n + m + i) = -1.0;
      basis[static_cast<std::size_t>(r)] = n + m + i;
    }

    RevisedSimplex simplex(a, h, upper, std::move(basis));
    int pivots = 0;
    const int max_pivots = 50 * static_cast<int>(cols + m) + 1000;
    Vector z;
    Vector pi;
    if (n_art > 0) {
      Vector c1 = Vector::Zero(cols);
      c1.tail(n_art).setConstant(-1.0);
      simplex.optimize(c1, 1e-12, pivots, max_pivots);
      simplex.solution(c1, z, pi);
      const double infeas = z.tail(n_art).sum();
      if (infeas > 1e-9 * std::max(1.0, h.cwiseAbs().maxCoeff())) {
        result.status = LpStatus::infeasible;
        result.pivots = pivots;
        return result;
      }
      for (Eigen::Index i = 0; i < n_art; ++i) simplex.fix_at_zero(n + m + i);
    }
    Vector c2 = Vector::Zero(cols);
    c2.head(n) = problem.objective;
    const double cost_scale = std::max(1.0, problem.objective.cwiseAbs().maxCoeff());
    if (!simplex.optimize(c2, 1e-12 * cost_scale, pivots, max_pivots)) {
      // Cannot happen with finite bounds on every variable.
      throw Error("lp_solve: unbounded direction despite finite bounds");
    }
    simplex.solution(c2, z, pi);
    result.x = z.head(n) + lower;
    result.constraint_duals = pi.cwiseMax(0.0);
    result.pivots = pivots;
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const VariableBound b = problem.bound(i);
    result.x(i) = std::clamp(result.x(i), b.lower, b.upper);
  }
  result.objective = problem.objective.dot(result.x);
  result.status = LpStatus::optimal;
  const double box_tol = 1e-9 * problem.box;
  for (Eigen::Index i = 0; i < n; ++i) {
    const VariableBound b = problem.bound(i);
    const bool at_lower = std::abs(b.lower) >= problem.box && result.x(i) <= b.lower + box_tol;
    const bool at_upper = std::abs(b.upper) >= problem.box && result.x(i) >= b.upper - box_tol;
    if (at_lower || at_upper) {
      result.status = LpStatus::box_active;
      break;
    }
  }
  return result;
}

SingularExtremes singular_extremes(const Matrix& a) {
  if (a.size() == 0) throw InvalidArgument("singular_extremes: empty matrix");
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  // A wide matrix has min(rows, cols) singular values; the rest are zero only
  // if counted, which is not the convention used here.
  return {s.minCoeff(), s.maxCoeff()};
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return singular_extremes(a).max;
}

namespace {

void require_full_column_rank(const Matrix& a, const char* who) {
  if (a.rows() < a.cols() || a.cols() == 0) {
    std::ostringstream msg;
    msg << who << ": need rows >= cols >= 1, got " << a.rows() << "x" << a.cols();
    throw IllPosed(msg.str());
  }
  const SingularExtremes ext = singular_extremes(a);
  if (!(ext.min >= kRankTolerance * ext.max) || ext.max == 0.0) {
    std::ostringstream msg;
    msg << who << ": rank deficient (sigma_min = " << ext.min << ", sigma_max = " << ext.max << ")";
    throw IllPosed(msg.str());
  }
}

}  // namespace

Vector least_squares(const Matrix& a, const Vector& b) {
  if (a.rows() != b.size()) throw InvalidArgument("least_squares: dimension mismatch");
  require_full_column_rank(a, "least_squares");
  return a.colPivHouseholderQr().solve(b);
}

Matrix pseudoinverse(const Matrix& a) {
  require_full_column_rank(a, "pseudoinverse");
  return a.colPivHouseholderQr().solve(Matrix::Identity(a.rows(), a.rows()));
}

}  // namespace dualsr
