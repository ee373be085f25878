#include "csdesign/sdr.hpp"

#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace csd {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Converged:
      return "converged";
    case Termination::MaxIter:
      return "max_iter";
    case Termination::Stalled:
      return "stalled";
  }
  return "unknown";
}

namespace {

// f(Q) = mean_S Tr{(prior_inv + (H^T W(Q) H)[S,S])^-1} and its gradient.
class GramObjective {
 public:
  GramObjective(const SystemModel& model, const SupportEnsemble& ensemble, Matrix prior_inv)
      : model_(model), ensemble_(ensemble), prior_inv_(std::move(prior_inv)) {
    if (!(model.sigma_w() > 0.0)) {
      throw ParameterError("the relaxed objective requires sigma_w > 0");
    }
    if (ensemble.size() == 0) throw ParameterError("empty support ensemble");
    a_ = model.g() * model.g() / (model.sigma_w() * model.sigma_w());
    if (model.sigma_v() > 0.0) {
      c_ = model.sigma_w() * model.sigma_w() / (model.g() * model.g() * model.sigma_v() * model.sigma_v());
    }
  }

  double value(const Matrix& q) { return evaluate(q, nullptr); }
  double value_grad(const Matrix& q, Matrix& grad) { return evaluate(q, &grad); }

 private:
  double evaluate(const Matrix& q, Matrix* grad) {
    const auto l = q.rows();
    if (c_ > 0.0) {
      shifted_ = q;
      shifted_.diagonal().array() += c_;
      llt_.compute(shifted_);
      if (llt_.info() != Eigen::Success) throw NumericalError("c I + Q is not positive definite");
      w_ = (a_ * c_) * symmetrized(llt_.solve(q));
    } else {
      w_ = a_ * q;
    }
    const Matrix& hwh = model_.h_is_identity() ? w_ : (hwh_ = symmetrized(model_.h().transpose() * w_ * model_.h()));

    const auto n = hwh.rows();
    if (grad) gn_.setZero(n, n);
    CompensatedSum sum;
    const std::size_t count = ensemble_.size();
    for (std::size_t e = 0; e < count; ++e) {
      const auto s = ensemble_[e];
      gather_block(hwh, s, block_);
      block_ += prior_inv_;
      sum.add(tr_inv_(block_));
      if (grad) {
        inv2_.noalias() = tr_inv_.inverse() * tr_inv_.inverse();
        const auto k = static_cast<Eigen::Index>(s.size());
        for (Eigen::Index j = 0; j < k; ++j) {
          for (Eigen::Index i = 0; i < k; ++i) gn_(s[i], s[j]) += inv2_(i, j);
        }
      }
    }
    const double inv_count = 1.0 / static_cast<double>(count);
    if (grad) {
      // dF/dW = -H Gn H^T / |ens|; then chain through W(Q).
      Matrix gw = model_.h_is_identity() ? Matrix(-inv_count * gn_)
                                         : Matrix(-inv_count * (model_.h() * gn_ * model_.h().transpose()));
      if (c_ > 0.0) {
        const Matrix inv = llt_.solve(Matrix::Identity(l, l));
        *grad = symmetrized((a_ * c_ * c_) * (inv * gw * inv));
      } else {
        *grad = symmetrized(a_ * gw);
      }
    }
    return sum.value() * inv_count;
  }

  const SystemModel& model_;
  const SupportEnsemble& ensemble_;
  Matrix prior_inv_;
  double a_ = 0.0;
  double c_ = 0.0;  // 0 encodes sigma_v = 0

  Matrix shifted_, w_, hwh_, gn_, block_, inv2_;
  Eigen::LLT<Matrix> llt_;
  detail::TraceInverse tr_inv_;
};

void check_ensemble(const SystemModel& model, const SupportEnsemble& ensemble) {
  if (ensemble.n() != model.n() || ensemble.k() != model.k()) {
    throw ParameterError("ensemble does not match model dimensions");
  }
}

void check_q(const SystemModel& model, const Matrix& q) {
  if (q.rows() != model.l() || q.cols() != model.l()) throw ParameterError("Q must be l x l");
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw ParameterError("Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(q), Eigen::EigenvaluesOnly);
  const Vector& lam = es.eigenvalues();
  if (lam(0) < -1e-10 * std::max(1.0, std::abs(lam(lam.size() - 1)))) {
    throw ParameterError("Q must be positive semidefinite");
  }
}

Matrix rx_inverse(const SystemModel& model) {
  Eigen::LLT<Matrix> llt(model.rx());
  if (llt.info() != Eigen::Success) throw NumericalError("R_x is not positive definite");
  return symmetrized(llt.solve(Matrix::Identity(model.n(), model.n())));
}

SupportEnsemble whole_index_set(int n) {
  Support all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  return SupportEnsemble::from_supports(n, n, {all});
}

// Euclidean projection of a symmetric matrix onto {X >= 0, Tr X <= budget}.
Matrix project_capped_spectrahedron(const Matrix& y, double budget) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(y));
  Vector lam = es.eigenvalues().cwiseMax(0.0);
  if (lam.sum() > budget) {
    // Simplex projection of the eigenvalues: find theta with
    // sum_i max(lambda_i - theta, 0) = budget.
    std::vector<double> u(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      cumsum += u[j];
      const double t = (cumsum - budget) / static_cast<double>(j + 1);
      if (u[j] - t > 0.0) theta = t;
    }
    lam = (es.eigenvalues().array() - theta).cwiseMax(0.0).matrix();
  }
  return symmetrized(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
}

double inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

SdrResult run_solver(const SystemModel& model, GramObjective& objective, const SdrOptions& options) {
  if (options.max_iter < 1) throw ParameterError("max_iter must be positive");
  if (!(options.tol > 0.0)) throw ParameterError("tol must be positive");
  const auto l = model.l();
  const double budget = model.p();

  // Whitening by C = H R_x H^T + sigma_v^2 I turns the power constraint into
  // a plain trace bound, whose projection is exact.
  Eigen::SelfAdjointEigenSolver<Matrix> ces(model.power_weight());
  const Vector& cl = ces.eigenvalues();
  if (!(cl(0) > 1e-14 * cl(cl.size() - 1))) {
    throw NumericalError("power weighting H R_x H^T + sigma_v^2 I is singular");
  }
  const Matrix& cu = ces.eigenvectors();
  const Matrix c_half = cu * cl.cwiseSqrt().asDiagonal() * cu.transpose();
  const Matrix c_inv_half = cu * cl.cwiseSqrt().cwiseInverse().asDiagonal() * cu.transpose();
  const auto to_q = [&](const Matrix& x) { return symmetrized(c_inv_half * x * c_inv_half); };

  Matrix x;
  if (options.initial) {
    if (options.initial->rows() != l || options.initial->cols() != l) throw ParameterError("initial Q must be l x l");
    x = project_capped_spectrahedron(c_half * symmetrized(*options.initial) * c_half, budget);
  } else {
    x = (budget / model.power_weight().trace()) * model.power_weight();
  }

  Matrix gq;
  double f = objective.value_grad(to_q(x), gq);
  Matrix gx = symmetrized(c_inv_half * gq * c_inv_half);
  const double f0 = f;

  double t = options.step_policy == StepPolicy::Fixed ? options.fixed_step
                                                      : x.norm() / std::max(gx.norm(), 1e-300);
  SolverTrace trace;
  trace.termination = Termination::MaxIter;
  std::deque<double> history{f};
  double last_step = 0.0;

  for (int it = 0;; ++it) {
    const double lam_min = min_eigenvalue(gx);
    const double gap = std::max(0.0, inner(gx, x) - budget * std::min(0.0, lam_min));
    SolverIterate rec;
    rec.iteration = it;
    rec.objective = f;
    rec.step = last_step;
    rec.gradient_norm = (x - project_capped_spectrahedron(x - gx, budget)).norm();
    rec.gap = gap;
    rec.power_active = x.trace() >= budget * (1.0 - 1e-9);
    trace.iterates.push_back(rec);

    if (gap <= options.tol * ((f0 - f) + 1e-6 * std::abs(f))) {
      trace.termination = Termination::Converged;
      break;
    }
    if (it >= options.max_iter) {
      trace.termination = Termination::MaxIter;
      break;
    }

    bool accepted = false;
    Matrix xn;
    double fn = f;
    for (int bt = 0; bt < 80; ++bt) {
      xn = project_capped_spectrahedron(x - t * gx, budget);
      const Matrix d = xn - x;
      if (d.norm() == 0.0) break;
      fn = objective.value(to_q(xn));
      if (fn <= f + 1e-4 * inner(gx, d)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      trace.termination = Termination::Stalled;
      break;
    }

    Matrix gqn;
    fn = objective.value_grad(to_q(xn), gqn);
    Matrix gxn = symmetrized(c_inv_half * gqn * c_inv_half);
    last_step = t;
    if (options.step_policy == StepPolicy::BarzilaiBorwein) {
      const Matrix s = xn - x;
      const double sy = inner(s, gxn - gx);
      t = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * t;
      t = std::clamp(t, 1e-30, 1e30);
    } else {
      t = options.fixed_step;
    }
    x = std::move(xn);
    gx = std::move(gxn);
    f = fn;

    history.push_back(f);
    if (static_cast<int>(history.size()) > options.stall_window + 1) history.pop_front();
    if (static_cast<int>(history.size()) == options.stall_window + 1 &&
        history.front() - f <= options.stall_tol * std::abs(f)) {
      trace.termination = Termination::Stalled;
      SolverIterate last;
      last.iteration = it + 1;
      last.objective = f;
      last.step = last_step;
      last.gap = std::max(0.0, inner(gx, x) - budget * std::min(0.0, min_eigenvalue(gx)));
      last.gradient_norm = (x - project_capped_spectrahedron(x - gx, budget)).norm();
      last.power_active = x.trace() >= budget * (1.0 - 1e-9);
      trace.iterates.push_back(last);
      break;
    }
  }

  SdrResult out;
  out.candidate.q = to_q(x);
  out.candidate.objective = f;
  out.candidate.residuals = feasibility(model, out.candidate.q);
  out.trace = std::move(trace);
  return out;
}

struct Whitening {
  Matrix half;      // C^{1/2}
  Matrix inv_half;  // C^{-1/2}
};

Whitening power_whitening(const SystemModel& model) {
  Eigen::SelfAdjointEigenSolver<Matrix> ces(model.power_weight());
  const Vector& cl = ces.eigenvalues();
  if (!(cl(0) > 1e-14 * cl(cl.size() - 1))) {
    throw NumericalError("power weighting H R_x H^T + sigma_v^2 I is singular");
  }
  const Matrix& cu = ces.eigenvectors();
  return {cu * cl.cwiseSqrt().asDiagonal() * cu.transpose(),
          cu * cl.cwiseSqrt().cwiseInverse().asDiagonal() * cu.transpose()};
}

// Projected gradient on B = A C^{1/2} over the ball ||B||_F^2 <= P.
FactorResult run_factor_solver(const SystemModel& model, GramObjective& objective, const Matrix& a0,
                               const SdrOptions& options) {
  if (a0.cols() != model.l() || a0.rows() < 1) throw ParameterError("initial A must have l columns");
  const double budget = model.p();
  const Whitening w = power_whitening(model);
  const auto project = [&](Matrix b) {
    const double n2 = b.squaredNorm();
    if (n2 > budget) b *= std::sqrt(budget / n2);
    return b;
  };
  const auto to_a = [&](const Matrix& b) { return Matrix(b * w.inv_half); };
  const auto eval = [&](const Matrix& b, Matrix* grad) {
    const Matrix a = to_a(b);
    const Matrix q = symmetrized(a.transpose() * a);
    if (!grad) return objective.value(q);
    Matrix gq;
    const double f = objective.value_grad(q, gq);
    *grad = 2.0 * b * symmetrized(w.inv_half * gq * w.inv_half);
    return f;
  };

  Matrix b = a0 * w.half;
  const double n0 = b.squaredNorm();
  if (!(n0 > 0.0)) throw ParameterError("initial A must be nonzero");
  b *= std::sqrt(budget / n0);
  Matrix g;
  double f = eval(b, &g);
  double t = b.norm() / std::max(g.norm(), 1e-300);
  SolverTrace trace;
  trace.termination = Termination::MaxIter;
  std::deque<double> history{f};
  double last_step = 0.0;

  for (int it = 0;; ++it) {
    SolverIterate rec;
    rec.iteration = it;
    rec.objective = f;
    rec.step = last_step;
    rec.gradient_norm = (b - project(b - g)).norm();
    rec.power_active = b.squaredNorm() >= budget * (1.0 - 1e-9);
    trace.iterates.push_back(rec);
    // First-order decrease still available, relative to f.
    if (rec.gradient_norm * b.norm() <= options.tol * std::abs(f)) {
      trace.termination = Termination::Converged;
      break;
    }
    if (it >= options.max_iter) break;

    bool accepted = false;
    Matrix bn;
    double fn = f;
    for (int bt = 0; bt < 80; ++bt) {
      bn = project(b - t * g);
      const Matrix d = bn - b;
      if (d.norm() == 0.0) break;
      fn = eval(bn, nullptr);
      if (fn <= f + 1e-4 * inner(g, d)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      trace.termination = Termination::Stalled;
      break;
    }
    Matrix gn;
    fn = eval(bn, &gn);
    last_step = t;
    const Matrix s = bn - b;
    const double sy = inner(s, gn - g);
    t = std::clamp(sy > 0.0 ? s.squaredNorm() / sy : 2.0 * t, 1e-30, 1e30);
    b = std::move(bn);
    g = std::move(gn);
    f = fn;
    history.push_back(f);
    if (static_cast<int>(history.size()) > options.stall_window + 1) history.pop_front();
    if (static_cast<int>(history.size()) == options.stall_window + 1 &&
        history.front() - f <= 1e-12 * std::abs(f)) {
      trace.termination = Termination::Stalled;
      break;
    }
  }

  FactorResult out;
  out.a = to_a(b);
  out.objective = f;
  out.trace = std::move(trace);
  return out;
}

}  // namespace

FeasibilityResiduals feasibility(const SystemModel& model, const Matrix& q) {
  FeasibilityResiduals r;
  r.power_slack = model.p() - (model.power_weight() * q).trace();
  r.min_eigenvalue = min_eigenvalue(symmetrized(q));
  return r;
}

double relaxed_objective(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& q) {
  check_ensemble(model, ensemble);
  check_q(model, q);
  GramObjective obj(model, ensemble, model.r_inv());
  return obj.value(q);
}

Matrix relaxed_gradient(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& q) {
  check_ensemble(model, ensemble);
  check_q(model, q);
  GramObjective obj(model, ensemble, model.r_inv());
  Matrix grad;
  obj.value_grad(q, grad);
  return grad;
}

double lmmse_relaxed_objective(const SystemModel& model, const Matrix& q) {
  check_q(model, q);
  const SupportEnsemble all = whole_index_set(model.n());
  GramObjective obj(model, all, rx_inverse(model));
  return obj.value(q);
}

Matrix lmmse_relaxed_gradient(const SystemModel& model, const Matrix& q) {
  check_q(model, q);
  const SupportEnsemble all = whole_index_set(model.n());
  GramObjective obj(model, all, rx_inverse(model));
  Matrix grad;
  obj.value_grad(q, grad);
  return grad;
}

SdrResult solve_sdr(const SystemModel& model, const SupportEnsemble& ensemble, const SdrOptions& options) {
  check_ensemble(model, ensemble);
  GramObjective obj(model, ensemble, model.r_inv());
  return run_solver(model, obj, options);
}

SdrResult solve_lmmse_sdr(const SystemModel& model, const SdrOptions& options) {
  const SupportEnsemble all = whole_index_set(model.n());
  GramObjective obj(model, all, rx_inverse(model));
  return run_solver(model, obj, options);
}

SlackWitness canonical_witness(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& q) {
  check_ensemble(model, ensemble);
  check_q(model, q);
  if (!(model.sigma_v() > 0.0) || !(model.sigma_w() > 0.0)) {
    throw ParameterError("the LMI characterization requires sigma_v > 0 and sigma_w > 0");
  }
  const double a = model.g() * model.g() / (model.sigma_w() * model.sigma_w());
  const double c = model.sigma_w() * model.sigma_w() / (model.g() * model.g() * model.sigma_v() * model.sigma_v());
  Matrix shifted = q;
  shifted.diagonal().array() += c;
  Eigen::LLT<Matrix> llt(shifted);
  SlackWitness w;
  w.y = symmetrized(a * q * llt.solve(q));
  const Matrix wq = symmetrized(a * q - w.y);
  const Matrix hwh = symmetrized(model.h().transpose() * wq * model.h());
  detail::TraceInverse tr_inv;
  Matrix block;
  w.x_s.reserve(ensemble.size());
  for (std::size_t e = 0; e < ensemble.size(); ++e) {
    gather_block(hwh, ensemble[e], block);
    block += model.r_inv();
    tr_inv(block);
    w.x_s.push_back(symmetrized(tr_inv.inverse()));
  }
  return w;
}

LmiReport verify_lmi_witness(const SystemModel& model, const SupportEnsemble& ensemble, const Matrix& q,
                             const SlackWitness& witness, double tol) {
  check_ensemble(model, ensemble);
  if (!(model.sigma_v() > 0.0) || !(model.sigma_w() > 0.0)) {
    throw ParameterError("the LMI characterization requires sigma_v > 0 and sigma_w > 0");
  }
  const auto l = model.l();
  const auto k = model.k();
  if (q.rows() != l || q.cols() != l) throw ParameterError("Q must be l x l");
  if (witness.y.rows() != l || witness.y.cols() != l) throw ParameterError("Y must be l x l");
  if (witness.x_s.size() != ensemble.size()) throw ParameterError("one X_S per support is required");

  const double g_over_w = model.g() / model.sigma_w();
  const double a = g_over_w * g_over_w;
  const double c = model.sigma_w() * model.sigma_w() / (model.g() * model.g() * model.sigma_v() * model.sigma_v());

  LmiReport rep;
  const Matrix mid = model.h().transpose() * (a * q - witness.y) * model.h();
  Matrix top;
  Matrix big(2 * k, 2 * k);
  CompensatedSum sum_tr;
  rep.min_support_block_eig = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < ensemble.size(); ++e) {
    const Matrix& xs = witness.x_s[e];
    if (xs.rows() != k || xs.cols() != k) throw ParameterError("X_S must be k x k");
    gather_block(mid, ensemble[e], top);
    top += model.r_inv();
    big.topLeftCorner(k, k) = top;
    big.topRightCorner(k, k).setIdentity();
    big.bottomLeftCorner(k, k).setIdentity();
    big.bottomRightCorner(k, k) = xs;
    const double ev = min_eigenvalue(symmetrized(big));
    rep.support_block_min_eig.push_back(ev);
    rep.min_support_block_eig = std::min(rep.min_support_block_eig, ev);
    sum_tr.add(xs.trace());
  }
  Matrix y_block(2 * l, 2 * l);
  y_block.topLeftCorner(l, l) = witness.y;
  y_block.topRightCorner(l, l) = g_over_w * q;
  y_block.bottomLeftCorner(l, l) = g_over_w * q;
  y_block.bottomRightCorner(l, l) = q;
  y_block.bottomRightCorner(l, l).diagonal().array() += c;
  rep.y_block_min_eig = min_eigenvalue(symmetrized(y_block));
  rep.q_min_eig = min_eigenvalue(symmetrized(q));
  rep.power_slack = model.p() - (model.power_weight() * q).trace();
  rep.sum_trace_x = sum_tr.value();
  rep.scaled_objective = rep.q_min_eig >= -tol ? static_cast<double>(ensemble.size()) *
                                                     relaxed_objective(model, ensemble, symmetrized(q))
                                               : std::numeric_limits<double>::quiet_NaN();
  rep.feasible = rep.min_support_block_eig >= -tol && rep.y_block_min_eig >= -tol && rep.q_min_eig >= -tol &&
                 rep.power_slack >= -tol * model.p();
  return rep;
}



FactorResult refine_lmmse_factor(const SystemModel& model, const Matrix& a0, const SdrOptions& options) {
  const SupportEnsemble all = whole_index_set(model.n());
  GramObjective obj(model, all, rx_inverse(model));
  return run_factor_solver(model, obj, a0, options);
}

Matrix lmmse_signal_subspace(const SystemModel& model, int m) {
  if (m < 1 || m > model.l()) throw ParameterError("m must satisfy 1 <= m <= l");
  const Whitening w = power_whitening(model);
  const Matrix hr = model.h() * model.rx();
  const Matrix s = symmetrized(w.inv_half * hr * hr.transpose() * w.inv_half);
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const auto l = s.rows();
  Matrix a(m, l);
  for (int i = 0; i < m; ++i) a.row(i) = es.eigenvectors().col(l - 1 - i).transpose() * w.inv_half;
  return a;
}

}  // namespace csd
