#ifndef CSDESIGN_SDR_HPP
#define CSDESIGN_SDR_HPP

#include "csdesign/model.hpp"

#include <optional>

namespace csd {

// Rank-relaxed design over the Gram matrix Q = A^T A.
//
// With a = g^2 / sigma_w^2, c = sigma_w^2 / (g^2 sigma_v^2) and D_S = H E_S,
// the oracle bound becomes a function of Q alone:
//
//   f(Q) = mean_S Tr{(R^-1 + D_S^T W(Q) D_S)^-1},
//   W(Q) = a (Q - Q (c I + Q)^-1 Q) = a c Q (c I + Q)^-1,
//
// with W(Q) = a Q when sigma_v = 0. f is convex on the PSD cone; it is
// minimized subject to Tr{(H R_x H^T + sigma_v^2 I) Q} <= P and Q >= 0.

struct FeasibilityResiduals {
  double power_slack = 0.0;  ///< P - Tr(C Q); >= 0 when feasible
  double min_eigenvalue = 0.0;
};

struct GramCandidate {
  Matrix q;
  double objective = 0.0;
  FeasibilityResiduals residuals;
};

enum class Termination { Converged, MaxIter, Stalled };
const char* to_string(Termination t);

struct SolverIterate {
  int iteration = 0;
  double objective = 0.0;
  double step = 0.0;
  double gradient_norm = 0.0;  ///< Frobenius norm of the whitened projected-gradient map
  double gap = 0.0;            ///< Frank-Wolfe duality gap, an upper bound on f - f*
  bool power_active = false;
};

struct SolverTrace {
  std::vector<SolverIterate> iterates;
  Termination termination = Termination::MaxIter;
};

enum class StepPolicy { BarzilaiBorwein, Fixed };

struct SdrOptions {
  int max_iter = 5000;
  /// Converged when gap <= tol * (f(Q0) - f(Q) + 1e-6 |f(Q)|).
  double tol = 1e-7;
  /// Stalled when the objective moved by less than stall_tol * |f| over
  /// stall_window accepted steps without meeting `tol`.
  double stall_tol = 1e-14;
  int stall_window = 10;
  StepPolicy step_policy = StepPolicy::BarzilaiBorwein;
  /// Step length for StepPolicy::Fixed (whitened coordinates); still backtracked.
  double fixed_step = 1.0;
  /// Starting Gram matrix; defaults to (P / Tr C) I. Rescaled onto the
  /// feasible set if needed.
  std::optional<Matrix> initial;
};

struct SdrResult {
  GramCandidate candidate;
  SolverTrace trace;
};

double relaxed_objective(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& q);
Matrix relaxed_gradient(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& q);

/// Relaxed LMMSE objective Tr{(R_x^-1 + H^T W(Q) H)^-1}.
double lmmse_relaxed_objective(const SystemModel& model, const Matrix& q);
Matrix lmmse_relaxed_gradient(const SystemModel& model, const Matrix& q);

/// Projected gradient on the relaxed lower-bound problem.
SdrResult solve_sdr(const SystemModel& model, const SupportEnsemble& ensemble, const SdrOptions& options = {});

/// Same machinery on the relaxed LMMSE objective.
SdrResult solve_lmmse_sdr(const SystemModel& model, const SdrOptions& options = {});

/// Rank-constrained LMMSE design: projected gradient over the factor A
/// itself (M x L, power constraint Tr{C A^T A} <= P), started from a0 scaled
/// onto the power sphere. The problem is not convex in A; this finds a
/// stationary point near a0.
struct FactorResult {
  Matrix a;
  double objective = 0.0;
  SolverTrace trace;
};
FactorResult refine_lmmse_factor(const SystemModel& model, const Matrix& a0, const SdrOptions& options = {});

/// M x L start for the rank-M LMMSE problem: rows C^{-1/2} u_i with u_i the
/// leading eigenvectors of C^{-1/2} H R_x^2 H^T C^{-1/2}. These are the
/// directions the noise-free rank-M LMMSE solution keeps.
Matrix lmmse_signal_subspace(const SystemModel& model, int m);

/// Feasibility residuals of an arbitrary Q.
FeasibilityResiduals feasibility(const SystemModel& model, const Matrix& q);

// --- LMI characterization -------------------------------------------------

/// Slack variables of the lifted problem: one K x K X_S per support, one
/// L x L Y.
struct SlackWitness {
  std::vector<Matrix> x_s;
  Matrix y;
};

struct LmiReport {
  std::vector<double> support_block_min_eig;  ///< per support, first LMI family
  double min_support_block_eig = 0.0;
  double y_block_min_eig = 0.0;  ///< second LMI
  double q_min_eig = 0.0;
  double power_slack = 0.0;
  double sum_trace_x = 0.0;
  /// |ensemble| * relaxed_objective(q), the value sum Tr(X_S) can reach.
  double scaled_objective = 0.0;
  bool feasible = false;
};

/// X_S = (R^-1 + D_S^T W(Q) D_S)^-1 and Y = a Q (c I + Q)^-1 Q: every
/// Schur complement is zero, so the LMIs hold with equality-tight slack.
SlackWitness canonical_witness(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& q);

/// Checks both LMI families plus Q >= 0 and the power constraint.
/// Requires sigma_v > 0 and sigma_w > 0.
LmiReport verify_lmi_witness(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& q,
                             const SlackWitness& witness, double tol = 1e-8);

}  // namespace csd

#endif  // CSDESIGN_SDR_HPP
