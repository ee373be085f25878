#ifndef CSDESIGN_ESTIMATORS_HPP
#define CSDESIGN_ESTIMATORS_HPP

#include "csdesign/metrics.hpp"
#include "csdesign/model.hpp"

#include <optional>
#include <string>

namespace csd {

struct Reconstruction {
  Vector x_hat;
  std::optional<Support> support_estimate;
  /// Posterior support probabilities (exhaustive MMSE only), in the
  /// lexicographic order of SupportEnsemble::full.
  std::optional<std::vector<double>> weights;
  std::vector<std::string> warnings;
};

/// Largest C(N, K) the exhaustive MMSE estimator will enumerate.
inline constexpr double kMaxExhaustiveSupports = 1e5;

struct RandomOmpOptions {
  int passes = 20;
  /// Divides every score; 0 makes each pass pick atoms exactly as OMP does.
  double temperature = 1.0;
};

/// Per-design decoder state. Everything that depends only on (model, A) is
/// computed once; the estimate methods are const and may be called from
/// several threads at once.
///
/// With sigma_v = sigma_w = 0 the Gaussian formulas degenerate; the oracle
/// and LMMSE estimators then use their noiseless limits (least squares on
/// the support, and R_x Phi^T (Phi R_x Phi^T)^+ y).
class Decoder {
 public:
  Decoder(const SystemModel& model, const Matrix& a);

  const SystemModel& model() const { return model_; }
  const Matrix& a() const { return a_; }
  /// g A H, the M x N matrix the decoder sees.
  const Matrix& effective() const { return effective_; }
  bool noiseless() const { return noiseless_; }

  Reconstruction oracle(const Vector& y, SupportView support) const;
  Reconstruction lmmse(const Vector& y) const;
  Reconstruction mmse_exhaustive(const Vector& y) const;
  Reconstruction omp(const Vector& y) const;
  Reconstruction random_omp(const Vector& y, const RandomOmpOptions& options, Rng& rng) const;

 private:
  Vector oracle_mean(const Vector& b, const Vector& y, SupportView support) const;

  SystemModel model_;
  Matrix a_;
  Matrix effective_;
  bool noiseless_ = false;
  InformationOperator op_;  // empty when noiseless
  Matrix lmmse_gain_;       // N x M
  double sigma_eff2_ = 0.0;
  double prior_var_ = 0.0;
};

/// E[x | y, S]: Wiener filter on the true support, zeros elsewhere.
Reconstruction oracle_mmse(const SystemModel& model, const Matrix& a, const Vector& y, SupportView support);

/// g (R_x^-1 + g^2 H^T A^T R_n^-1 A H)^-1 H^T A^T R_n^-1 y.
Reconstruction lmmse(const SystemModel& model, const Matrix& a, const Vector& y);

/// Posterior-weighted mixture of oracle means over every support.
Reconstruction mmse_exhaustive(const SystemModel& model, const Matrix& a, const Vector& y);

/// Orthogonal matching pursuit on the effective matrix a_eff = g A H: k
/// rounds of largest normalized correlation (lowest index on ties), least
/// squares refit after each round.
Reconstruction omp(const Matrix& a_eff, const Vector& y, int k);

/// Randomized Bayesian OMP. Each pass grows a support by sampling atom i
/// with probability proportional to exp(score_i / temperature), where
///   score_i = (a_i^T r)^2 / (2 sigma^2 ||a_i||^2) * s ||a_i||^2 / (s ||a_i||^2 + sigma^2),
/// sigma^2 is the mean diagonal of R_n and s the mean diagonal of R. Each pass
/// contributes the oracle mean on its support; the output is their average.
Reconstruction random_omp(const SystemModel& model, const Matrix& a, const Vector& y, const RandomOmpOptions& options,
                          Rng& rng);

}  // namespace csd

#endif  // CSDESIGN_ESTIMATORS_HPP
