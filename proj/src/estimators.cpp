#include "csdesign/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace csd {

namespace {

struct LeastSquares {
  Vector coef;
  bool rank_deficient = false;
};

LeastSquares least_squares(const Matrix& a, const std::vector<int>& cols, const Vector& y) {
  Matrix sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = a.col(cols[j]);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sub);
  return {cod.solve(y), cod.rank() < static_cast<Eigen::Index>(cols.size())};
}

constexpr const char* kRankWarning = "selected columns are rank deficient; minimum-norm least-squares fit used";

// Grows a support one atom at a time. `pick` sees the current residual and
// the selection mask and returns the next column.
template <class Pick>
Reconstruction greedy_pursuit(const Matrix& a, const Vector& y, int k, Pick&& pick) {
  const auto n = a.cols();
  if (y.size() != a.rows()) throw ParameterError("y length must match the rows of the measurement matrix");
  if (k < 1 || k > n) throw ParameterError("k must satisfy 1 <= k <= n");
  std::vector<int> selected;
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  Vector residual = y;
  LeastSquares fit;
  for (int round = 0; round < k; ++round) {
    const int i = pick(residual, used);
    used[static_cast<std::size_t>(i)] = 1;
    selected.push_back(i);
    fit = least_squares(a, selected, y);
    residual = y;
    for (std::size_t j = 0; j < selected.size(); ++j) residual -= fit.coef(static_cast<Eigen::Index>(j)) * a.col(selected[j]);
  }
  Reconstruction out;
  out.x_hat = Vector::Zero(n);
  for (std::size_t j = 0; j < selected.size(); ++j) out.x_hat(selected[j]) = fit.coef(static_cast<Eigen::Index>(j));
  if (fit.rank_deficient) out.warnings.emplace_back(kRankWarning);
  std::sort(selected.begin(), selected.end());
  out.support_estimate = std::move(selected);
  return out;
}

// Highest |a_i^T r| / ||a_i|| among unused columns, lowest index on ties.
int argmax_correlation(const Matrix& a, const Vector& norms, const Vector& r, const std::vector<char>& used) {
  int best = -1;
  double best_val = -1.0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    if (used[static_cast<std::size_t>(i)]) continue;
    const double c = norms(i) > 0.0 ? std::abs(a.col(i).dot(r)) / norms(i) : 0.0;
    if (c > best_val) {
      best_val = c;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

Decoder::Decoder(const SystemModel& model, const Matrix& a) : model_(model), a_(a) {
  if (a.cols() != model.l()) throw ParameterError("A must have l columns");
  effective_ = model.g() * a * model.h();
  noiseless_ = model.sigma_v() == 0.0 && model.sigma_w() == 0.0;
  prior_var_ = model.r().diagonal().mean();
  if (noiseless_) {
    const Matrix cov = symmetrized(effective_ * model.rx() * effective_.transpose());
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(cov);
    lmmse_gain_ = model.rx() * effective_.transpose() * cod.pseudoInverse();
    return;
  }
  op_ = information_operator(model, a);
  sigma_eff2_ = noise_covariance(model, a).diagonal().mean();
  Eigen::LLT<Matrix> rx_llt(model.rx());
  if (rx_llt.info() != Eigen::Success) throw NumericalError("R_x is not positive definite");
  const auto n = model.n();
  const Matrix prec = symmetrized(rx_llt.solve(Matrix::Identity(n, n))) + op_.info;
  Eigen::LLT<Matrix> llt(prec);
  if (llt.info() != Eigen::Success) throw NumericalError("LMMSE precision matrix is not positive definite");
  lmmse_gain_ = llt.solve(op_.filter);
}

Vector Decoder::oracle_mean(const Vector& b, const Vector& y, SupportView support) const {
  const int k = static_cast<int>(support.size());
  Vector x = Vector::Zero(model_.n());
  if (noiseless_) {
    const LeastSquares fit = least_squares(effective_, std::vector<int>(support.begin(), support.end()), y);
    for (int i = 0; i < k; ++i) x(support[i]) = fit.coef(i);
    return x;
  }
  Matrix block(k, k);
  gather_block(op_.info, support, block);
  block += model_.r_inv();
  Vector bs(k);
  for (int i = 0; i < k; ++i) bs(i) = b(support[i]);
  Eigen::LLT<Matrix> llt(block);
  if (llt.info() != Eigen::Success) throw NumericalError("per-support information matrix is not positive definite");
  const Vector xs = llt.solve(bs);
  for (int i = 0; i < k; ++i) x(support[i]) = xs(i);
  return x;
}

Reconstruction Decoder::oracle(const Vector& y, SupportView support) const {
  if (y.size() != effective_.rows()) throw ParameterError("y length must equal the number of measurements");
  for (int i : support) {
    if (i < 0 || i >= model_.n()) throw ParameterError("support index out of range");
  }
  Reconstruction out;
  out.x_hat = oracle_mean(noiseless_ ? Vector() : Vector(op_.filter * y), y, support);
  out.support_estimate = Support(support.begin(), support.end());
  return out;
}

Reconstruction Decoder::lmmse(const Vector& y) const {
  if (y.size() != effective_.rows()) throw ParameterError("y length must equal the number of measurements");
  Reconstruction out;
  out.x_hat = lmmse_gain_ * y;
  return out;
}

Reconstruction Decoder::mmse_exhaustive(const Vector& y) const {
  if (y.size() != effective_.rows()) throw ParameterError("y length must equal the number of measurements");
  const int n = model_.n();
  const int k = model_.k();
  if (binomial(n, k) > kMaxExhaustiveSupports) {
    throw ParameterError("exhaustive MMSE needs C(N,K) <= 1e5 supports; use random-OMP instead");
  }
  if (noiseless_) throw NumericalError("exhaustive MMSE needs a nonzero noise covariance");
  const auto ens = SupportEnsemble::full(n, k);
  const Vector b = op_.filter * y;
  const std::size_t count = ens.size();
  std::vector<double> logw(count);
  Matrix means(k, static_cast<Eigen::Index>(count));
  Matrix block(k, k);
  Vector bs(k);
  Eigen::LLT<Matrix> llt(k);
  double max_logw = -std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < count; ++e) {
    const auto s = ens[e];
    gather_block(op_.info, s, block);
    block += model_.r_inv();
    for (int i = 0; i < k; ++i) bs(i) = b(s[i]);
    llt.compute(block);
    if (llt.info() != Eigen::Success) throw NumericalError("per-support information matrix is not positive definite");
    const Vector xs = llt.solve(bs);
    // log N(y; 0, Sigma_S) up to a support-independent constant, via the
    // determinant lemma and Woodbury: -1/2 logdet M_S + 1/2 b_S^T M_S^-1 b_S.
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    logw[e] = -0.5 * logdet + 0.5 * bs.dot(xs);
    means.col(static_cast<Eigen::Index>(e)) = xs;
    max_logw = std::max(max_logw, logw[e]);
  }
  CompensatedSum total;
  for (double& w : logw) {
    w = std::exp(w - max_logw);
    total.add(w);
  }
  const double z = total.value();
  Reconstruction out;
  out.x_hat = Vector::Zero(n);
  std::size_t best = 0;
  for (std::size_t e = 0; e < count; ++e) {
    logw[e] /= z;
    if (logw[e] > logw[best]) best = e;
    const auto s = ens[e];
    for (int i = 0; i < k; ++i) out.x_hat(s[i]) += logw[e] * means(i, static_cast<Eigen::Index>(e));
  }
  out.support_estimate = Support(ens[best].begin(), ens[best].end());
  out.weights = std::move(logw);
  return out;
}

Reconstruction Decoder::omp(const Vector& y) const { return csd::omp(effective_, y, model_.k()); }

Reconstruction Decoder::random_omp(const Vector& y, const RandomOmpOptions& options, Rng& rng) const {
  if (options.passes < 1) throw ParameterError("random-OMP needs at least one pass");
  if (options.temperature < 0.0) throw ParameterError("random-OMP temperature must be nonnegative");
  if (y.size() != effective_.rows()) throw ParameterError("y length must equal the number of measurements");
  const auto n = effective_.cols();
  const Vector sq_norms = effective_.colwise().squaredNorm().transpose();
  const double s = prior_var_;
  const double sigma2 = sigma_eff2_;
  const bool greedy = options.temperature == 0.0 || sigma2 == 0.0;
  Vector weight(n);  // s / (2 sigma^2 (s ||a_i||^2 + sigma^2)), the factor on (a_i^T r)^2
  for (Eigen::Index i = 0; i < n; ++i) {
    weight(i) = greedy ? (sq_norms(i) > 0.0 ? 1.0 / sq_norms(i) : 0.0)
                       : s / (2.0 * sigma2 * (s * sq_norms(i) + sigma2)) / options.temperature;
  }
  const Vector b = noiseless_ ? Vector() : Vector(op_.filter * y);
  std::vector<double> scores(static_cast<std::size_t>(n));
  auto pick = [&](const Vector& r, const std::vector<char>& used) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      if (used[ui]) {
        scores[ui] = -std::numeric_limits<double>::infinity();
        continue;
      }
      const double c = effective_.col(i).dot(r);
      scores[ui] = weight(i) * c * c;
      if (scores[ui] > best) {
        best = scores[ui];
        arg = static_cast<int>(i);
      }
    }
    if (greedy) return arg;
    CompensatedSum total;
    for (double& v : scores) {
      v = std::isinf(v) ? 0.0 : std::exp(v - best);
      total.add(v);
    }
    const double u = rng.uniform() * total.value();
    double acc = 0.0;
    int last = arg;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      if (used[ui]) continue;
      last = static_cast<int>(i);
      acc += scores[ui];
      if (u < acc) return last;
    }
    return last;
  };
  Reconstruction out;
  out.x_hat = Vector::Zero(model_.n());
  bool deficient = false;
  for (int p = 0; p < options.passes; ++p) {
    Reconstruction pass = greedy_pursuit(effective_, y, model_.k(), pick);
    deficient = deficient || !pass.warnings.empty();
    out.x_hat += oracle_mean(b, y, *pass.support_estimate);
    if (p == 0) out.support_estimate = std::move(pass.support_estimate);
  }
  out.x_hat /= static_cast<double>(options.passes);
  if (options.passes > 1) out.support_estimate.reset();
  if (deficient) out.warnings.emplace_back(kRankWarning);
  return out;
}

Reconstruction oracle_mmse(const SystemModel& model, const Matrix& a, const Vector& y, SupportView support) {
  return Decoder(model, a).oracle(y, support);
}

Reconstruction lmmse(const SystemModel& model, const Matrix& a, const Vector& y) { return Decoder(model, a).lmmse(y); }

Reconstruction mmse_exhaustive(const SystemModel& model, const Matrix& a, const Vector& y) {
  return Decoder(model, a).mmse_exhaustive(y);
}

Reconstruction omp(const Matrix& a_eff, const Vector& y, int k) {
  const Vector norms = a_eff.colwise().norm().transpose();
  return greedy_pursuit(a_eff, y, k, [&](const Vector& r, const std::vector<char>& used) {
    return argmax_correlation(a_eff, norms, r, used);
  });
}

Reconstruction random_omp(const SystemModel& model, const Matrix& a, const Vector& y, const RandomOmpOptions& options,
                          Rng& rng) {
  return Decoder(model, a).random_omp(y, options, rng);
}

}  // namespace csd
