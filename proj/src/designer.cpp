#include "csdesign/designer.hpp"

#include "csdesign/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace csd {

namespace {

struct MethodName {
  DesignMethod method;
  const char* name;
};

constexpr MethodName kMethodNames[] = {
    {DesignMethod::LowerBound, "lower-bound"}, {DesignMethod::UpperBound, "upper-bound"},
    {DesignMethod::Gaussian, "gaussian"},      {DesignMethod::TightFrame, "tight-frame"},
    {DesignMethod::Randomized, "randomized"},  {DesignMethod::ClosedForm1, "case1"},
    {DesignMethod::ClosedForm2, "case2"},      {DesignMethod::ClosedForm3, "case3"},
    {DesignMethod::ClosedForm4, "case4"},
};

// Returns sigma_x^2 when R = sigma_x^2 I.
double isotropic_variance(const SystemModel& model, const char* who) {
  const Matrix& r = model.r();
  const double s2 = r(0, 0);
  if ((r - s2 * Matrix::Identity(r.rows(), r.cols())).cwiseAbs().maxCoeff() > 1e-12 * s2) {
    throw ParameterError(std::string(who) + " requires R = sigma_x^2 I");
  }
  return s2;
}

void require_identity_h(const SystemModel& model, const char* who) {
  if (!model.h_is_identity()) throw ParameterError(std::string(who) + " requires H = I");
}

SensingMatrix scaled_truncated_identity(const SystemModel& model, DesignMethod method) {
  SensingMatrix out;
  out.a = Matrix::Zero(model.m(), model.l());
  out.a.leftCols(model.m()).setIdentity();
  out.method = method;
  return power_rescale(model, std::move(out));
}

}  // namespace

std::string to_string(DesignMethod m) {
  for (const auto& e : kMethodNames) {
    if (e.method == m) return e.name;
  }
  return "unknown";
}

DesignMethod parse_design_method(const std::string& name) {
  for (const auto& e : kMethodNames) {
    if (name == e.name) return e.method;
  }
  throw ParameterError("unknown design method '" + name + "'");
}

bool has_full_row_rank(const Matrix& a) {
  if (a.rows() == 0 || a.rows() > a.cols()) return false;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  return s(0) > 0.0 && s(s.size() - 1) > 1e-10 * s(0);
}

SensingMatrix low_rank_factor(const Matrix& q, int m) {
  if (q.rows() != q.cols()) throw ParameterError("Q must be square");
  if (m < 1 || m > q.rows()) throw ParameterError("m must satisfy 1 <= m <= l");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(q));
  const auto l = q.rows();
  // Eigen sorts ascending; the factor uses the descending order.
  const Vector gamma = es.eigenvalues().reverse().cwiseMax(0.0);
  const Matrix u = es.eigenvectors().rowwise().reverse();
  SensingMatrix out;
  out.method = DesignMethod::LowerBound;
  out.a.resize(m, l);
  for (int i = 0; i < m; ++i) out.a.row(i) = std::sqrt(gamma(i)) * u.col(i).transpose();
  int rank = 0;
  for (Eigen::Index i = 0; i < l; ++i) rank += gamma(i) > 1e-10 * gamma(0) ? 1 : 0;
  if (m > rank) {
    std::ostringstream os;
    os << "Q has numerical rank " << rank << " < m = " << m << "; trailing singular values are zero";
    out.warnings.push_back(os.str());
  }
  return out;
}

SensingMatrix power_rescale(const SystemModel& model, SensingMatrix a) {
  const double power = transmit_power(model, a.a);
  if (!(power > 0.0)) throw NumericalError("cannot rescale a sensing matrix with zero transmit power");
  a.a *= std::sqrt(model.p() / power);
  a.power_normalized = true;
  return a;
}

SensingMatrix power_rescale(const SystemModel& model, const Matrix& a) {
  SensingMatrix s;
  s.a = a;
  return power_rescale(model, std::move(s));
}

SensingMatrix design_from_gram(const SystemModel& model, const SdrResult& sdr, DesignMethod method) {
  SensingMatrix out = low_rank_factor(sdr.candidate.q, model.m());
  out.method = method;
  out.trace = sdr.trace;
  if (sdr.trace.termination != Termination::Converged) {
    out.warnings.push_back(std::string("SDR solver terminated with status ") + to_string(sdr.trace.termination));
  }
  return power_rescale(model, std::move(out));
}

SensingMatrix design_lower_bound(const SystemModel& model, const SupportEnsemble& ensemble,
                                 const DesignOptions& options) {
  return design_from_gram(model, solve_sdr(model, ensemble, options.sdr), DesignMethod::LowerBound);
}

SensingMatrix design_upper_bound(const SystemModel& model, const DesignOptions& options) {
  return design_upper_bound_from_gram(model, solve_lmmse_sdr(model, options.sdr), options);
}

SensingMatrix design_upper_bound_from_gram(const SystemModel& model, const SdrResult& sdr,
                                           const DesignOptions& options) {
  // Truncating the relaxed optimum can drop the high-variance directions of
  // R_x, so the rank-M problem is refined from two starts and the better
  // local solution kept.
  const FactorResult from_gram = refine_lmmse_factor(model, low_rank_factor(sdr.candidate.q, model.m()).a, options.sdr);
  const FactorResult from_signal = refine_lmmse_factor(model, lmmse_signal_subspace(model, model.m()), options.sdr);
  const FactorResult& best = from_signal.objective < from_gram.objective ? from_signal : from_gram;
  SensingMatrix out;
  out.a = best.a;
  out.method = DesignMethod::UpperBound;
  out.trace = sdr.trace;
  return power_rescale(model, std::move(out));
}

SensingMatrix closed_form_case1(const SystemModel& model) {
  isotropic_variance(model, "closed-form case 1");
  require_identity_h(model, "closed-form case 1");
  return scaled_truncated_identity(model, DesignMethod::ClosedForm1);
}

SensingMatrix closed_form_case2(const SystemModel& model) {
  isotropic_variance(model, "closed-form case 2");
  if (model.sigma_v() != 0.0) throw ParameterError("closed-form case 2 requires sigma_v = 0");
  if (model.l() != model.n()) throw ParameterError("closed-form case 2 requires a square H");
  Eigen::JacobiSVD<Matrix> svd(model.h(), Eigen::ComputeFullU);
  // JacobiSVD sorts descending; the construction inverts the smallest ones.
  const Vector gamma = svd.singularValues().reverse();
  const Matrix u = svd.matrixU().rowwise().reverse();
  if (!(gamma(0) > 1e-12 * gamma(gamma.size() - 1))) throw NumericalError("closed-form case 2: H is singular");
  for (Eigen::Index i = 1; i < gamma.size(); ++i) {
    if (gamma(i) < gamma(i - 1)) throw NumericalError("singular values of H are not ascending");
  }
  SensingMatrix out;
  out.method = DesignMethod::ClosedForm2;
  out.a.resize(model.m(), model.l());
  for (int i = 0; i < model.m(); ++i) out.a.row(i) = u.col(i).transpose() / gamma(i);
  return power_rescale(model, std::move(out));
}

SensingMatrix closed_form_case3(const SystemModel& model) {
  isotropic_variance(model, "closed-form case 3");
  require_identity_h(model, "closed-form case 3");
  if (model.sigma_w() != 0.0) throw ParameterError("closed-form case 3 requires sigma_w = 0");
  return scaled_truncated_identity(model, DesignMethod::ClosedForm3);
}

Matrix low_snr_gain_matrix(const SystemModel& model, const SupportEnsemble& ensemble) {
  if (ensemble.n() != model.n() || ensemble.k() != model.k()) {
    throw ParameterError("ensemble does not match model dimensions");
  }
  const Matrix r2 = model.r() * model.r();
  const int k = model.k();
  Matrix inner = Matrix::Zero(model.n(), model.n());
  for (std::size_t e = 0; e < ensemble.size(); ++e) {
    const auto s = ensemble[e];
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) inner(s[a], s[b]) += r2(a, b);
    }
  }
  return symmetrized(model.h() * inner * model.h().transpose());
}

Matrix closed_form_case4_gram(const SystemModel& model, const SupportEnsemble& ensemble) {
  if (model.sigma_v() != 0.0) throw ParameterError("closed-form case 4 requires sigma_v = 0");
  const Matrix t = low_snr_gain_matrix(model, ensemble);
  Eigen::SelfAdjointEigenSolver<Matrix> tes(t);
  const Vector& tl = tes.eigenvalues();
  if (!(tl(0) > 1e-12 * tl(tl.size() - 1))) throw NumericalError("closed-form case 4: T is singular");
  const Matrix t_inv_half =
      tes.eigenvectors() * tl.cwiseSqrt().cwiseInverse().asDiagonal() * tes.eigenvectors().transpose();
  const Matrix z = symmetrized(t_inv_half * model.power_weight() * t_inv_half);
  Eigen::SelfAdjointEigenSolver<Matrix> zes(z);
  // Ascending order: column 0 is the smallest eigenvalue; exact ties keep
  // the lowest column index.
  const double gamma_z1 = zes.eigenvalues()(0);
  if (!(gamma_z1 > 0.0)) throw NumericalError("closed-form case 4: Z is not positive definite");
  const Vector dir = t_inv_half * zes.eigenvectors().col(0);
  return symmetrized((model.p() / gamma_z1) * dir * dir.transpose());
}

SensingMatrix closed_form_case4(const SystemModel& model, const SupportEnsemble& ensemble) {
  SensingMatrix out = low_rank_factor(closed_form_case4_gram(model, ensemble), model.m());
  out.method = DesignMethod::ClosedForm4;
  return power_rescale(model, std::move(out));
}

SensingMatrix design_gaussian(const SystemModel& model, Rng& rng) {
  SensingMatrix out;
  out.a = rng.gaussian(model.m(), model.l());
  out.method = DesignMethod::Gaussian;
  out.seed = rng.seed();
  return power_rescale(model, std::move(out));
}

Matrix haar_orthogonal(int n, Rng& rng) {
  const Matrix z = rng.gaussian(n, n);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  }
  return q;
}

SensingMatrix design_tight_frame(const SystemModel& model, Rng& rng) {
  const Matrix ua = haar_orthogonal(model.m(), rng);
  const Matrix va = haar_orthogonal(model.l(), rng);
  SensingMatrix out;
  out.a = ua * va.leftCols(model.m()).transpose();
  out.method = DesignMethod::TightFrame;
  out.seed = rng.seed();
  return power_rescale(model, std::move(out));
}

namespace {

// Gamma^{1/2} U^T of a PSD Q.
Matrix gram_half(const Matrix& q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(q));
  return es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Matrix draw_from_half(const Matrix& half, int m, Rng& rng) {
  return rng.gaussian(m, static_cast<int>(half.rows()), 1.0 / std::sqrt(static_cast<double>(m))) * half;
}

}  // namespace

Matrix randomized_candidate(const Matrix& q, int m, Rng& rng) {
  if (q.rows() != q.cols()) throw ParameterError("Q must be square");
  if (m < 1) throw ParameterError("m must be at least 1");
  return draw_from_half(gram_half(q), m, rng);
}

SensingMatrix design_randomized(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& q,
                                int realizations, Rng& rng) {
  if (realizations < 1) throw ParameterError("realizations must be at least 1");
  if (q.rows() != model.l() || q.cols() != model.l()) throw ParameterError("Q must be l x l");
  const Matrix half = gram_half(q);
  SensingMatrix best;
  double best_bound = std::numeric_limits<double>::infinity();
  for (int r = 0; r < realizations; ++r) {
    SensingMatrix cand = power_rescale(model, draw_from_half(half, model.m(), rng));
    const double bound = mse_lower_bound_from_info(model, ensemble, information_operator(model, cand.a).info);
    if (bound < best_bound) {
      best_bound = bound;
      best = std::move(cand);
    }
  }
  best.method = DesignMethod::Randomized;
  best.seed = rng.seed();
  return best;
}

}  // namespace csd
