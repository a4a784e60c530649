#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace seis::lp {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// min c'x  s.t.  A x = b,  lower <= x <= upper  (bounds may be infinite).
template <typename Scalar>
struct LinearProgram {
  Mat<Scalar> A;
  Vec<Scalar> b;
  Vec<Scalar> c;
  Vec<Scalar> lower;
  Vec<Scalar> upper;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

template <typename Scalar>
struct Result {
  Status status = Status::iteration_limit;
  Vec<Scalar> x;
  Scalar objective = 0;
  int iterations = 0;
};

template <typename Scalar>
struct Options {
  Scalar tolerance = Scalar(1e-9);
  int max_iterations = 50000;
};

/// Bounded-variable primal simplex over a dense tableau. Phase one drives signed
/// artificials to zero; Bland's rule selects entering and leaving variables, so
/// degenerate pivots cannot cycle.
template <typename Scalar>
class BoundedSimplex {
 public:
  explicit BoundedSimplex(const LinearProgram<Scalar>& lp, Options<Scalar> opt = {}) : lp_(lp), opt_(opt) {}

  Result<Scalar> solve() {
    const Eigen::Index m = lp_.A.rows(), n = lp_.A.cols();
    const Scalar inf = std::numeric_limits<Scalar>::infinity();
    total_ = n + m;
    lower_.resize(total_);
    upper_.resize(total_);
    lower_.head(n) = lp_.lower;
    upper_.head(n) = lp_.upper;
    lower_.tail(m).setZero();
    upper_.tail(m).setConstant(inf);

    x_ = Vec<Scalar>::Zero(total_);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::isfinite(static_cast<double>(lower_(j)))) x_(j) = lower_(j);
      else if (std::isfinite(static_cast<double>(upper_(j)))) x_(j) = upper_(j);
    }
    const Vec<Scalar> residual = lp_.b - lp_.A * x_.head(n);
    sign_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) sign_(i) = residual(i) >= 0 ? Scalar(1) : Scalar(-1);

    tableau_.resize(m, total_);
    tableau_.leftCols(n) = sign_.asDiagonal() * lp_.A;
    tableau_.rightCols(m).setIdentity();
    basis_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      basis_[i] = n + i;
      x_(n + i) = std::abs(residual(i));
    }

    Result<Scalar> result;
    Vec<Scalar> phase1_cost = Vec<Scalar>::Zero(total_);
    phase1_cost.tail(m).setOnes();
    Status s = iterate(phase1_cost, result.iterations);
    if (s == Status::iteration_limit) {
      result.status = s;
      return result;
    }
    const Scalar infeasibility = x_.tail(m).sum();
    if (infeasibility > opt_.tolerance * (Scalar(1) + lp_.b.cwiseAbs().sum())) {
      result.status = Status::infeasible;
      return result;
    }
    upper_.tail(m).setZero();
    x_.tail(m).setZero();

    Vec<Scalar> phase2_cost = Vec<Scalar>::Zero(total_);
    phase2_cost.head(n) = lp_.c;
    s = iterate(phase2_cost, result.iterations);
    result.status = s;
    if (s != Status::optimal) return result;
    refine();
    result.x = x_.head(n);
    result.objective = lp_.c.dot(result.x);
    return result;
  }

 private:
  Status iterate(const Vec<Scalar>& cost, int& iterations) {
    const Eigen::Index m = tableau_.rows();
    const Scalar tol = opt_.tolerance;
    std::vector<bool> is_basic(total_, false);
    for (auto bi : basis_) is_basic[bi] = true;

    while (iterations < opt_.max_iterations) {
      Vec<Scalar> cost_basis(m);
      for (Eigen::Index i = 0; i < m; ++i) cost_basis(i) = cost(basis_[i]);
      const Vec<Scalar> reduced = cost - tableau_.transpose() * cost_basis;

      Eigen::Index entering = -1;
      Scalar direction = 0;
      for (Eigen::Index j = 0; j < total_; ++j) {
        if (is_basic[j]) continue;
        if (reduced(j) < -tol && x_(j) < upper_(j) - tol) {
          entering = j;
          direction = 1;
          break;
        }
        if (reduced(j) > tol && x_(j) > lower_(j) + tol) {
          entering = j;
          direction = -1;
          break;
        }
      }
      if (entering < 0) return Status::optimal;
      ++iterations;

      Scalar step = upper_(entering) - lower_(entering);  // bound flip distance
      Eigen::Index leaving_row = -1;
      for (Eigen::Index i = 0; i < m; ++i) {
        const Scalar alpha = direction * tableau_(i, entering);
        Scalar limit;
        if (alpha > tol) limit = (x_(basis_[i]) - lower_(basis_[i])) / alpha;
        else if (alpha < -tol) limit = (upper_(basis_[i]) - x_(basis_[i])) / -alpha;
        else continue;
        limit = std::max(limit, Scalar(0));
        const bool better = leaving_row < 0
                                ? limit < step - tol
                                : limit < step - tol || (limit <= step + tol && basis_[i] < basis_[leaving_row]);
        if (better) {
          step = limit;
          leaving_row = i;
        }
      }
      if (!std::isfinite(static_cast<double>(step))) return Status::unbounded;

      x_(entering) += direction * step;
      for (Eigen::Index i = 0; i < m; ++i) x_(basis_[i]) -= direction * step * tableau_(i, entering);
      if (leaving_row < 0) continue;  // bound flip, basis unchanged

      const Eigen::Index leaving = basis_[leaving_row];
      const Scalar alpha = direction * tableau_(leaving_row, entering);
      x_(leaving) = alpha > 0 ? lower_(leaving) : upper_(leaving);
      pivot(leaving_row, entering);
      is_basic[leaving] = false;
      is_basic[entering] = true;
      basis_[leaving_row] = entering;
    }
    return Status::iteration_limit;
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    tableau_.row(row) /= tableau_(row, col);
    for (Eigen::Index i = 0; i < tableau_.rows(); ++i) {
      if (i == row) continue;
      const Scalar f = tableau_(i, col);
      if (f != Scalar(0)) tableau_.row(i) -= f * tableau_.row(row);
    }
  }

  // Recompute basic values from the original data to shed accumulated pivot error.
  void refine() {
    const Eigen::Index m = tableau_.rows(), n = lp_.A.cols();
    if (m == 0) return;
    Mat<Scalar> basis_matrix(m, m);
    Vec<Scalar> rhs = lp_.b;
    std::vector<bool> is_basic(total_, false);
    for (auto bi : basis_) is_basic[bi] = true;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!is_basic[j]) rhs -= lp_.A.col(j) * x_(j);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index j = basis_[i];
      if (j < n) basis_matrix.col(i) = lp_.A.col(j);
      else basis_matrix.col(i) = Vec<Scalar>::Unit(m, j - n) * sign_(j - n);
    }
    Eigen::FullPivLU<Mat<Scalar>> lu(basis_matrix);
    if (!lu.isInvertible()) return;
    const Vec<Scalar> xb = lu.solve(rhs);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index j = basis_[i];
      x_(j) = std::clamp(xb(i), lower_(j), upper_(j));
    }
  }

  const LinearProgram<Scalar>& lp_;
  Options<Scalar> opt_;
  Eigen::Index total_ = 0;
  Mat<Scalar> tableau_;
  Vec<Scalar> x_, lower_, upper_, sign_;
  std::vector<Eigen::Index> basis_;
};

template <typename Scalar>
Result<Scalar> solve(const LinearProgram<Scalar>& lp, Options<Scalar> opt = {}) {
  return BoundedSimplex<Scalar>(lp, opt).solve();
}

}  // namespace seis::lp
