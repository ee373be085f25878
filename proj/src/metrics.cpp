#include "csdesign/metrics.hpp"

#include "kernels.hpp"

#include <cmath>
#include <limits>

namespace csd {

InformationOperator information_operator(const SystemModel& model, const Matrix& a) {
  if (a.cols() != model.l()) throw ParameterError("A must have l columns");
  const double g = model.g();
  const Matrix phi = a * model.h();
  InformationOperator out;
  const auto m = a.rows();
  if (model.sigma_w() > 0.0) {
    Eigen::LLT<Matrix> llt(noise_covariance(model, a));
    if (llt.info() != Eigen::Success) throw NumericalError("noise covariance is not positive definite");
    out.rn_pinv = symmetrized(llt.solve(Matrix::Identity(m, m)));
  } else if (model.sigma_v() > 0.0) {
    // R_n = g^2 sigma_v^2 A A^T is singular whenever A loses row rank.
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a * a.transpose()));
    const Vector& lam = es.eigenvalues();
    const double cutoff = kPseudoInverseRankTol * std::max(lam.cwiseAbs().maxCoeff(), 0.0);
    Vector inv = Vector::Zero(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (lam(i) > cutoff && lam(i) > 0.0) inv(i) = 1.0 / lam(i);
    }
    const double gv2 = g * g * model.sigma_v() * model.sigma_v();
    out.rn_pinv = symmetrized(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() / gv2);
    out.pseudo_inverse = true;
  } else {
    throw NumericalError("noise covariance is zero (sigma_v = sigma_w = 0): no finite information operator");
  }
  out.filter = g * phi.transpose() * out.rn_pinv;
  out.info = symmetrized(g * out.filter * phi);
  return out;
}

double mse_lower_bound_from_info(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& info,
                                 std::vector<std::pair<Support, double>>* terms) {
  if (ensemble.n() != model.n() || ensemble.k() != model.k()) {
    throw ParameterError("ensemble does not match model dimensions");
  }
  if (ensemble.size() == 0) throw ParameterError("empty support ensemble");
  detail::TraceInverse tr_inv;
  Matrix block(model.k(), model.k());
  CompensatedSum sum;
  for (std::size_t e = 0; e < ensemble.size(); ++e) {
    const auto s = ensemble[e];
    gather_block(info, s, block);
    block += model.r_inv();
    const double t = tr_inv(block);
    sum.add(t);
    if (terms) terms->emplace_back(Support(s.begin(), s.end()), t);
  }
  return sum.value() / static_cast<double>(ensemble.size());
}

BoundReport mse_lower_bound(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& a,
                            bool keep_terms) {
  const InformationOperator op = information_operator(model, a);
  BoundReport rep;
  rep.ensemble_kind = ensemble.kind();
  rep.value = mse_lower_bound_from_info(model, ensemble, op.info, keep_terms ? &rep.per_support_terms : nullptr);
  return rep;
}

BoundReport mse_lower_bound_sampled(const SystemModel& model, int omega_prime_size, std::uint64_t seed,
                                    const Matrix& a, bool keep_terms) {
  if (omega_prime_size < 1) throw ParameterError("omega_prime_size must be at least 1");
  const auto ens = SupportEnsemble::sampled(model.n(), model.k(), omega_prime_size, seed);
  return mse_lower_bound(model, ens, a, keep_terms);
}

double lmmse_mse(const SystemModel& model, const Matrix& a) {
  const InformationOperator op = information_operator(model, a);
  Eigen::LLT<Matrix> rx_llt(model.rx());
  if (rx_llt.info() != Eigen::Success) throw NumericalError("R_x is not positive definite");
  const auto n = model.n();
  Matrix prec = symmetrized(rx_llt.solve(Matrix::Identity(n, n))) + op.info;
  detail::TraceInverse tr_inv;
  return tr_inv(prec);
}

double transmit_power(const SystemModel& model, const Matrix& a) {
  if (a.cols() != model.l()) throw ParameterError("A must have l columns");
  return (a * model.power_weight() * a.transpose()).trace();
}

double nmse(const std::vector<Vector>& x_true, const std::vector<Vector>& x_hat, int k) {
  if (x_true.size() != x_hat.size()) throw ParameterError("nmse: trial counts differ");
  if (x_true.empty()) throw ParameterError("nmse: no trials");
  if (k < 1) throw ParameterError("nmse: k must be positive");
  CompensatedSum sum;
  for (std::size_t t = 0; t < x_true.size(); ++t) {
    if (x_true[t].size() != x_hat[t].size()) throw ParameterError("nmse: vector lengths differ");
    sum.add((x_true[t] - x_hat[t]).squaredNorm());
  }
  return sum.value() / static_cast<double>(x_true.size()) / static_cast<double>(k);
}

double to_db(double linear) {
  return linear > 0.0 ? 10.0 * std::log10(linear) : -std::numeric_limits<double>::infinity();
}

CoherenceReport mutual_coherence(const Matrix& a) {
  CoherenceReport rep;
  const Vector norms = a.colwise().norm().transpose();
  std::vector<Eigen::Index> live;
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    if (norms(i) > 0.0) {
      live.push_back(i);
    } else {
      ++rep.skipped_zero_columns;
    }
  }
  for (std::size_t p = 0; p < live.size(); ++p) {
    for (std::size_t q = p + 1; q < live.size(); ++q) {
      const auto i = live[p];
      const auto j = live[q];
      const double c = std::abs(a.col(i).dot(a.col(j))) / (norms(i) * norms(j));
      rep.value = std::max(rep.value, std::min(c, 1.0));
    }
  }
  return rep;
}

double frame_potential(const Matrix& a) {
  Matrix gram = a.transpose() * a;
  gram.diagonal().array() -= 1.0;
  return gram.norm();
}

}  // namespace csd
