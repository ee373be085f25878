#ifndef CSDESIGN_MODEL_HPP
#define CSDESIGN_MODEL_HPP

#include "csdesign/common.hpp"
#include "csdesign/rng.hpp"

#include <optional>

namespace csd {

/// Raw parameters of the source / sensor / channel chain
///   y = g A (H x + v) + w,  v ~ N(0, sigma_v^2 I_L),  w ~ N(0, sigma_w^2 I_M),
/// where x is exactly K-sparse with a uniformly random support and
/// x_S ~ N(0, R).
struct ModelParams {
  int n = 0;  ///< source dimension
  int k = 0;  ///< sparsity
  int l = 0;  ///< sensor-observation dimension (rows of H); 0 means n
  int m = 0;  ///< number of measurements
  Matrix h;   ///< L x N source-to-sensor channel; empty means identity
  double g = 1.0;
  double sigma_v = 0.0;
  double sigma_w = 0.0;
  double p = 1.0;  ///< average transmit power budget
  Matrix r;        ///< K x K covariance of the nonzero entries
};

/// Validated, immutable system model with cached derived quantities.
class SystemModel {
 public:
  explicit SystemModel(ModelParams params);

  int n() const { return params_.n; }
  int k() const { return params_.k; }
  int l() const { return params_.l; }
  int m() const { return params_.m; }
  const Matrix& h() const { return params_.h; }
  double g() const { return params_.g; }
  double sigma_v() const { return params_.sigma_v; }
  double sigma_w() const { return params_.sigma_w; }
  double p() const { return params_.p; }
  const Matrix& r() const { return params_.r; }
  const ModelParams& params() const { return params_; }

  const Matrix& r_inv() const { return r_inv_; }
  /// Lower Cholesky factor of R.
  const Matrix& r_chol() const { return r_chol_; }
  /// N x N covariance of the whole sparse source, E[x x^T].
  const Matrix& rx() const { return rx_; }
  /// L x L power weighting H R_x H^T + sigma_v^2 I_L.
  const Matrix& power_weight() const { return power_weight_; }
  bool h_is_identity() const { return h_identity_; }

  /// Copies of this model with one field changed (values re-validated).
  SystemModel with_m(int m) const;
  SystemModel with_power(double p) const;
  SystemModel with_gain(double g) const;
  /// Replaces the analytic R_x (e.g. with an empirical estimate).
  SystemModel with_source_covariance(const Matrix& rx) const;

 private:
  void derive(std::optional<Matrix> rx_override);

  ModelParams params_;
  Matrix r_inv_;
  Matrix r_chol_;
  Matrix rx_;
  Matrix power_weight_;
  bool h_identity_ = false;
};

/// The set of supports averaged over: all C(N, K) of them in lexicographic
/// order, or a uniform sample drawn without replacement.
class SupportEnsemble {
 public:
  enum class Kind { Full, Sampled };

  /// Largest C(N, K) that may be enumerated in full.
  static constexpr double kMaxFull = 1e6;

  static SupportEnsemble full(int n, int k);
  static SupportEnsemble sampled(int n, int k, int count, std::uint64_t seed);
  /// An explicit list of supports (each is validated and sorted).
  static SupportEnsemble from_supports(int n, int k, const std::vector<Support>& supports);

  int n() const { return n_; }
  int k() const { return k_; }
  Kind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return k_ == 0 ? 0 : indices_.size() / static_cast<std::size_t>(k_); }
  SupportView operator[](std::size_t i) const {
    return {indices_.data() + i * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_)};
  }

 private:
  SupportEnsemble(int n, int k, Kind kind, std::uint64_t seed) : n_(n), k_(k), kind_(kind), seed_(seed) {}

  int n_;
  int k_;
  Kind kind_;
  std::uint64_t seed_ = 0;
  std::vector<int> indices_;  // size() * k, row-major
};

struct SparseSample {
  Vector x;
  Support support;
};

/// R with R(i, j) = rho^|i - j|.
Matrix exponential_correlation(int k, double rho);

/// N x K matrix E_S: the columns of I_N indexed by `support`.
Matrix selection_matrix(SupportView support, int n);

/// (1/|ens|) sum_S E_S R E_S^T over the ensemble.
Matrix source_covariance(const SystemModel& model, const SupportEnsemble& ensemble);

/// Exact (1/C(N,K)) sum over all supports of E_S R E_S^T, computed by
/// counting how often each pair of indices lands at each pair of positions.
Matrix source_covariance_exact(const Matrix& r, int n);

/// Sample second moment of `draws` sparse source draws.
Matrix empirical_source_covariance(const SystemModel& model, int draws, Rng& rng);

SparseSample draw_sparse_sample(const SystemModel& model, Rng& rng);

/// y = g A (H x + v) + w with fresh noise draws (v first, then w).
Vector simulate_channel(const SystemModel& model, const Matrix& a, const Vector& x, Rng& rng);

/// Same chain with caller-supplied noise realizations.
Vector simulate_channel(const SystemModel& model, const Matrix& a, const Vector& x, const Vector& v,
                        const Vector& w);

/// R_n = g^2 sigma_v^2 A A^T + sigma_w^2 I_M.
Matrix noise_covariance(const SystemModel& model, const Matrix& a);

}  // namespace csd

#endif  // CSDESIGN_MODEL_HPP
