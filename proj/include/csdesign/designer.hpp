#ifndef CSDESIGN_DESIGNER_HPP
#define CSDESIGN_DESIGNER_HPP

#include "csdesign/model.hpp"
#include "csdesign/sdr.hpp"

#include <optional>
#include <string>

namespace csd {

enum class DesignMethod {
  LowerBound,
  UpperBound,
  Gaussian,
  TightFrame,
  Randomized,
  ClosedForm1,
  ClosedForm2,
  ClosedForm3,
  ClosedForm4,
};

/// Stable short names used on the command line and in result files.
std::string to_string(DesignMethod m);
DesignMethod parse_design_method(const std::string& name);

struct SensingMatrix {
  Matrix a;  ///< M x L
  DesignMethod method = DesignMethod::LowerBound;
  bool power_normalized = false;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> warnings;
  std::optional<SolverTrace> trace;

  int m() const { return static_cast<int>(a.rows()); }
  int l() const { return static_cast<int>(a.cols()); }
};

/// True when A has M singular values above 1e-10 * sigma_max.
bool has_full_row_rank(const Matrix& a);

/// Best rank-m PSD approximation of Q in Frobenius norm, factored as
/// A = [diag(sqrt(gamma_1..gamma_m)) 0] U_q^T (eigenvalues descending).
SensingMatrix low_rank_factor(const Matrix& q, int m);
inline SensingMatrix low_rank_factor(const GramCandidate& q, int m) { return low_rank_factor(q.q, m); }

/// Scales A so that transmit_power(model, A) == P.
SensingMatrix power_rescale(const SystemModel& model, SensingMatrix a);
SensingMatrix power_rescale(const SystemModel& model, const Matrix& a);

struct DesignOptions {
  SdrOptions sdr;
};

/// SDR, then rank-M truncation, then power rescale.
SensingMatrix design_lower_bound(const SystemModel& model, const SupportEnsemble& ensemble,
                                 const DesignOptions& options = {});
/// Second and third stage only, for a Gram solution already at hand (the
/// relaxed optimum does not depend on M, so sweeps over M reuse it).
SensingMatrix design_from_gram(const SystemModel& model, const SdrResult& sdr, DesignMethod method);

/// R = sigma_x^2 I, H = I: a scaled truncated identity (a tight frame).
SensingMatrix closed_form_case1(const SystemModel& model);
/// R = sigma_x^2 I, v = 0, H square invertible: A = c [Gamma_a 0] U_h^T with
/// Gamma_a the inverses of the M smallest singular values of H.
SensingMatrix closed_form_case2(const SystemModel& model);
/// w = 0, H = I, R = sigma_x^2 I: A = c [I_M 0].
SensingMatrix closed_form_case3(const SystemModel& model);
/// v = 0, low channel SNR: rank-one Gram along the direction that maximizes
/// the first-order gain Tr(T Q) per unit power.
SensingMatrix closed_form_case4(const SystemModel& model, const SupportEnsemble& ensemble);
/// The rank-one Gram matrix of the low-SNR closed form (before factoring).
Matrix closed_form_case4_gram(const SystemModel& model, const SupportEnsemble& ensemble);
/// T = sum_S D_S R^2 D_S^T over the ensemble.
Matrix low_snr_gain_matrix(const SystemModel& model, const SupportEnsemble& ensemble);

/// Minimizes the LMMSE error (the MMSE upper bound): relaxed Gram solution,
/// then a rank-M refinement of the factor from the truncated Gram matrix and
/// from the signal subspace, keeping the better one.
SensingMatrix design_upper_bound(const SystemModel& model, const DesignOptions& options = {});
/// Refinement and rescale only, from a relaxed LMMSE solution at hand.
SensingMatrix design_upper_bound_from_gram(const SystemModel& model, const SdrResult& sdr,
                                           const DesignOptions& options = {});

SensingMatrix design_gaussian(const SystemModel& model, Rng& rng);
/// U_a [I_M 0] V_a^T with Haar-random U_a, V_a.
SensingMatrix design_tight_frame(const SystemModel& model, Rng& rng);

/// Draws `realizations` matrices V Gamma^{1/2} U_q^T with V_ij ~ N(0, 1/M)
/// (so that E[A^T A] = Q), rescales each to power P and keeps the one with
/// the smallest lower bound on `ensemble` (lowest index wins ties).
SensingMatrix design_randomized(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& q,
                                int realizations, Rng& rng);

/// One unscaled draw V Gamma^{1/2} U_q^T, V_ij ~ N(0, 1/M).
Matrix randomized_candidate(const Matrix& q, int m, Rng& rng);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
Matrix haar_orthogonal(int n, Rng& rng);

}  // namespace csd

#endif  // CSDESIGN_DESIGNER_HPP
