#ifndef CSDESIGN_COMMON_HPP
#define CSDESIGN_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace csd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Sorted, zero-based indices of the nonzero entries of a K-sparse vector.
using Support = std::vector<int>;
using SupportView = std::span<const int>;

/// Invalid user-supplied parameter (bad dimension, out-of-range value).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical operation could not be completed (singular or indefinite
/// matrix where a definite one is required).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binomial coefficient as a double (exact for the magnitudes used here).
double binomial(int n, int k);

/// Neumaier-compensated running sum; deterministic for a fixed add order.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& sym);

/// Largest eigenvalue of a symmetric matrix.
double max_eigenvalue(const Matrix& sym);

/// Gathers the principal submatrix m[s, s].
void gather_block(const Matrix& m, SupportView s, Matrix& out);

}  // namespace csd

#endif  // CSDESIGN_COMMON_HPP
