#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochmatch/numeric.hpp"

namespace stochmatch {

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// max c'x  s.t.  Ax <= b, x >= 0.
template <class Scalar>
struct LinearProgram {
  VectorX<Scalar> objective;
  MatrixX<Scalar> constraints;  // rows x variables
  VectorX<Scalar> rhs;
  std::vector<std::string> variable_names;
  std::vector<std::string> row_names;

  LinearProgram() = default;
  explicit LinearProgram(Eigen::Index variables)
      : objective(VectorX<Scalar>::Zero(variables)), constraints(0, variables), rhs(0) {}

  Eigen::Index num_variables() const { return objective.size(); }
  Eigen::Index num_rows() const { return constraints.rows(); }

  template <class Row>
  void add_row(const Row& coeffs, const Scalar& bound, std::string name = {}) {
    if (coeffs.size() != num_variables()) {
      throw std::invalid_argument("constraint row has " + std::to_string(coeffs.size()) +
                                  " coefficients for " + std::to_string(num_variables()) +
                                  " variables");
    }
    const Eigen::Index r = num_rows();
    constraints.conservativeResize(r + 1, num_variables());
    rhs.conservativeResize(r + 1);
    constraints.row(r) = coeffs.transpose();
    rhs(r) = bound;
    row_names.push_back(std::move(name));
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

template <class Scalar>
struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  VectorX<Scalar> values;
  Scalar objective_value = Scalar(0);
  /// Row duals; together with `values` they certify optimality.
  VectorX<Scalar> duals;
  /// Basic variable per row. Indices >= num_variables() are slacks.
  std::vector<Eigen::Index> basis;
  int iterations = 0;
};

namespace detail {

/// Dense two-phase tableau. Cost row holds reduced costs c_j - c_B B^-1 A_j
/// and -z in the rhs column.
template <class Scalar>
class Tableau {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Tableau(const LinearProgram<Scalar>& lp) : n_(lp.num_variables()), m_(lp.num_rows()) {
    Eigen::Index artificials = 0;
    for (Eigen::Index i = 0; i < m_; ++i) artificials += lp.rhs(i) < Scalar(0) ? 1 : 0;
    cols_ = n_ + m_ + artificials;
    t_ = Matrix::Zero(m_ + 1, cols_ + 1);
    basis_.resize(static_cast<std::size_t>(m_));
    Eigen::Index next_artificial = n_ + m_;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const bool flip = lp.rhs(i) < Scalar(0);
      const Scalar sign = flip ? Scalar(-1) : Scalar(1);
      t_.row(i).head(n_) = sign * lp.constraints.row(i);
      t_(i, n_ + i) = sign;
      t_(i, cols_) = sign * lp.rhs(i);
      if (flip) {
        t_(i, next_artificial) = Scalar(1);
        basis_[static_cast<std::size_t>(i)] = next_artificial++;
      } else {
        basis_[static_cast<std::size_t>(i)] = n_ + i;
      }
    }
    first_artificial_ = n_ + m_;
  }

  /// Returns false when unbounded.
  bool optimize(const VectorX<Scalar>& cost, bool allow_artificial, int& iterations) {
    load_cost(cost);
    const Eigen::Index entering_limit = allow_artificial ? cols_ : first_artificial_;
    const int degenerate_limit = 5 * static_cast<int>(std::max<Eigen::Index>(n_, 5));
    const long cap = 50L * (m_ + cols_) + 1000;
    int degenerate_run = 0;
    const Scalar opt_tol = ScalarTraits<Scalar>::lp_tolerance() * Scalar(1e-1);
    const Scalar piv_tol = ScalarTraits<Scalar>::pivot_tolerance();
    for (long iter = 0;; ++iter) {
      if (iter > cap) throw std::runtime_error("simplex iteration limit exceeded");
      const bool bland = degenerate_run >= degenerate_limit;
      Eigen::Index col = -1;
      Scalar best = opt_tol;
      for (Eigen::Index j = 0; j < entering_limit; ++j) {
        const Scalar& d = t_(m_, j);
        if (d > best) {
          col = j;
          if (bland) break;
          best = d;
        }
      }
      if (col < 0) return true;
      Eigen::Index row = -1;
      Scalar ratio(0);
      for (Eigen::Index i = 0; i < m_; ++i) {
        const Scalar& a = t_(i, col);
        if (!(a > piv_tol)) continue;
        const Scalar r = t_(i, cols_) / a;
        if (row < 0 || r < ratio ||
            (r == ratio && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(row)])) {
          row = i;
          ratio = r;
        }
      }
      if (row < 0) return false;
      degenerate_run = ratio <= ScalarTraits<Scalar>::pivot_tolerance() ? degenerate_run + 1 : 0;
      pivot(row, col);
      ++iterations;
    }
  }

  Scalar objective() const { return Scalar(-t_(m_, cols_)); }

  /// After phase one: pivot basic artificials out where possible.
  void drive_out_artificials() {
    const Scalar piv_tol = ScalarTraits<Scalar>::pivot_tolerance();
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < first_artificial_) continue;
      Eigen::Index best = -1;
      for (Eigen::Index j = 0; j < first_artificial_; ++j) {
        if (abs_value(Scalar(t_(i, j))) > piv_tol &&
            (best < 0 || abs_value(Scalar(t_(i, j))) > abs_value(Scalar(t_(i, best))))) {
          best = j;
        }
      }
      // A row with no eligible entry is redundant; its artificial stays basic at 0.
      if (best >= 0) pivot(i, best);
    }
  }

  Eigen::Index columns() const { return cols_; }
  Eigen::Index first_artificial() const { return first_artificial_; }

  LpSolution<Scalar> extract(LpStatus status, int iterations) const {
    LpSolution<Scalar> sol;
    sol.status = status;
    sol.iterations = iterations;
    sol.values = VectorX<Scalar>::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index b = basis_[static_cast<std::size_t>(i)];
      if (b < n_) sol.values(b) = t_(i, cols_);
      sol.basis.push_back(b);
    }
    sol.duals.resize(m_);
    for (Eigen::Index i = 0; i < m_; ++i) sol.duals(i) = -t_(m_, n_ + i);
    return sol;
  }

 private:
  void load_cost(const VectorX<Scalar>& cost) {
    t_.row(m_).setZero();
    t_.row(m_).head(cost.size()) = cost.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index b = basis_[static_cast<std::size_t>(i)];
      const Scalar cb = b < cost.size() ? cost(b) : Scalar(0);
      if (cb != Scalar(0)) t_.row(m_) -= cb * t_.row(i);
    }
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    const Scalar inv = Scalar(1) / t_(row, col);
    t_.row(row) *= inv;
    t_(row, col) = Scalar(1);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const Scalar f = t_(i, col);
      if (f == Scalar(0)) continue;
      t_.row(i) -= f * t_.row(row);
      t_(i, col) = Scalar(0);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  Eigen::Index n_;
  Eigen::Index m_;
  Eigen::Index cols_ = 0;
  Eigen::Index first_artificial_ = 0;
  Matrix t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace detail

/// Two-phase dense simplex. Dantzig pricing, falling back to Bland's rule
/// after a run of degenerate pivots. Throws std::invalid_argument on a
/// malformed program and std::runtime_error if the iteration cap is hit.
template <class Scalar>
LpSolution<Scalar> solve_lp(const LinearProgram<Scalar>& lp) {
  if (lp.constraints.cols() != lp.num_variables() || lp.rhs.size() != lp.num_rows()) {
    throw std::invalid_argument("linear program dimensions are inconsistent");
  }
  if constexpr (!ScalarTraits<Scalar>::kExact) {
    if (!lp.rhs.allFinite() || !lp.constraints.allFinite() || !lp.objective.allFinite()) {
      throw std::invalid_argument("linear program has non-finite data");
    }
  }
  detail::Tableau<Scalar> tab(lp);
  int iterations = 0;
  if (tab.first_artificial() < tab.columns()) {
    VectorX<Scalar> phase1 = VectorX<Scalar>::Zero(tab.columns());
    phase1.tail(tab.columns() - tab.first_artificial()).setConstant(Scalar(-1));
    tab.optimize(phase1, true, iterations);
    if (tab.objective() < -ScalarTraits<Scalar>::lp_tolerance()) {
      return tab.extract(LpStatus::Infeasible, iterations);
    }
    tab.drive_out_artificials();
  }
  if (!tab.optimize(lp.objective, false, iterations)) {
    return tab.extract(LpStatus::Unbounded, iterations);
  }
  auto sol = tab.extract(LpStatus::Optimal, iterations);
  sol.objective_value = tab.objective();
  return sol;
}

/// Max violation of Ax <= b and x >= 0 at `x` (0 when feasible).
template <class Scalar>
Scalar max_violation(const LinearProgram<Scalar>& lp, const VectorX<Scalar>& x) {
  Scalar worst(0);
  const VectorX<Scalar> lhs = lp.constraints * x;
  for (Eigen::Index i = 0; i < lp.num_rows(); ++i) {
    const Scalar v = lhs(i) - lp.rhs(i);
    if (v > worst) worst = v;
  }
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (-x(j) > worst) worst = -x(j);
  }
  return worst;
}

}  // namespace stochmatch
