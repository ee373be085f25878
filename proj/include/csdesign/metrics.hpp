#ifndef CSDESIGN_METRICS_HPP
#define CSDESIGN_METRICS_HPP

#include "csdesign/model.hpp"

#include <utility>

namespace csd {

/// Decoder-side sufficient statistics of a sensing matrix.
///
/// With Phi = A H and R_n^+ the inverse (or, when sigma_w = 0, the rank-
/// truncated pseudo-inverse) of the total noise covariance:
///   info   = g^2 Phi^T R_n^+ Phi   (N x N)
///   filter = g Phi^T R_n^+         (N x M)
/// so that E[x_S | y, S] = (R^-1 + info[S,S])^-1 (filter y)[S].
struct InformationOperator {
  Matrix info;
  Matrix filter;
  Matrix rn_pinv;
  bool pseudo_inverse = false;
};

/// Relative rank cutoff applied to the eigenvalues of A A^T on the
/// sigma_w = 0 path.
inline constexpr double kPseudoInverseRankTol = 1e-10;

InformationOperator information_operator(const SystemModel& model, const Matrix& a);

struct BoundReport {
  double value = 0.0;
  /// Filled on request: (support, per-support oracle trace).
  std::vector<std::pair<Support, double>> per_support_terms;
  SupportEnsemble::Kind ensemble_kind = SupportEnsemble::Kind::Full;
};

/// Ensemble average of Tr{(R^-1 + g^2 E_S^T H^T A^T R_n^-1 A H E_S)^-1}.
BoundReport mse_lower_bound(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& a,
                            bool keep_terms = false);

/// Same average over a freshly drawn uniform sample of `omega_prime_size`
/// distinct supports.
BoundReport mse_lower_bound_sampled(const SystemModel& model, int omega_prime_size, std::uint64_t seed,
                                    const Matrix& a, bool keep_terms = false);

/// Lower-bound average for a precomputed information matrix.
double mse_lower_bound_from_info(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& info,
                                 std::vector<std::pair<Support, double>>* terms = nullptr);

/// MSE of the linear MMSE estimator, Tr{(R_x^-1 + g^2 H^T A^T R_n^-1 A H)^-1}.
double lmmse_mse(const SystemModel& model, const Matrix& a);

/// Tr{A (H R_x H^T + sigma_v^2 I) A^T}.
double transmit_power(const SystemModel& model, const Matrix& a);

/// Mean over trials of ||x - x_hat||^2, divided by k.
double nmse(const std::vector<Vector>& x_true, const std::vector<Vector>& x_hat, int k);
double to_db(double linear);

struct CoherenceReport {
  double value = 0.0;
  /// Number of all-zero columns left out of the maximization.
  int skipped_zero_columns = 0;
};

/// max_{i != j} |a_i^T a_j| / (||a_i|| ||a_j||).
CoherenceReport mutual_coherence(const Matrix& a);

/// ||A^T A - I||_F.
double frame_potential(const Matrix& a);

}  // namespace csd

#endif  // CSDESIGN_METRICS_HPP
