// Small dense kernels shared by the objective evaluators.
#ifndef CSDESIGN_SRC_KERNELS_HPP
#define CSDESIGN_SRC_KERNELS_HPP

#include "csdesign/common.hpp"

namespace csd::detail {

/// Reusable workspace for Tr(M^-1) of small SPD matrices. After the first
/// call with a given size no further allocation happens.
class TraceInverse {
 public:
  /// Returns Tr(M^-1); on return inverse() holds M^-1. Throws NumericalError
  /// when M is not positive definite.
  double operator()(const Matrix& m) {
    llt_.compute(m);
    if (llt_.info() != Eigen::Success) throw NumericalError("per-support information matrix is not positive definite");
    const auto k = m.rows();
    linv_.setIdentity(k, k);
    llt_.matrixL().solveInPlace(linv_);
    inv_.noalias() = linv_.transpose() * linv_;
    return linv_.squaredNorm();
  }
  const Matrix& inverse() const { return inv_; }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }

 private:
  Eigen::LLT<Matrix> llt_;
  Matrix linv_;
  Matrix inv_;
};

}  // namespace csd::detail

#endif  // CSDESIGN_SRC_KERNELS_HPP
