// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "csdesign/designer.hpp"
#include "csdesign/estimators.hpp"
#include "csdesign/experiments.hpp"
#include "csdesign/metrics.hpp"
#include "csdesign/sdr.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

using namespace csd;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[fail] ";
    }
    detail << what << "; ";
  }
};

SystemModel model_of(int n, int k, int m, double g, double sv, double sw, double p, Matrix r = {}, Matrix h = {}) {
  ModelParams mp;
  mp.n = n;
  mp.k = k;
  mp.m = m;
  mp.g = g;
  mp.sigma_v = sv;
  mp.sigma_w = sw;
  mp.p = p;
  mp.r = r.size() ? r : Matrix::Identity(k, k);
  mp.h = h;
  if (h.size()) mp.l = static_cast<int>(h.rows());
  return SystemModel(mp);
}

Matrix random_feasible(const SystemModel& model, Rng& rng, double fraction) {
  const Matrix b = rng.gaussian(model.l(), model.l());
  const Matrix q = b * b.transpose();
  return q * (fraction * model.p() / (model.power_weight() * q).trace());
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double db(double v) { return 10.0 * std::log10(v); }

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : v) ss += (e - mean) * (e - mean);
  return {mean, std::sqrt(ss / (n - 1) / n)};
}

// 1. Combinatorial identities and the closed-form source covariance.
void criterion1(Outcome& o) {
  bool exact = true;
  for (int n = 1; n <= 12; ++n) {
    for (int k = 1; k <= std::min(4, n); ++k) {
      const auto ens = SupportEnsemble::full(n, k);
      Matrix acc = Matrix::Zero(n, n);
      for (std::size_t i = 0; i < ens.size(); ++i) {
        const Matrix e = selection_matrix(ens[i], n);
        exact = exact && (e.transpose() * e) == Matrix::Identity(k, k);
        acc += e * e.transpose();
      }
      exact = exact && acc == binomial(n - 1, k - 1) * Matrix::Identity(n, n);
    }
  }
  o.require(exact, "E_S^T E_S = I and sum E_S E_S^T = C(N-1,K-1) I for N<=12, K<=4");
  const auto model = model_of(12, 3, 4, 1.0, 0.0, 0.1, 1.0, exponential_correlation(3, 0.5));
  Rng rng(101);
  const Matrix emp = empirical_source_covariance(model, 100000, rng);
  const double rel = (emp - model.rx()).norm() / model.rx().norm();
  o.require(rel <= 0.05, "R_x vs 1e5-draw sample covariance rel. Frobenius " + num(rel) + " <= 0.05");
}

// 2. Oracle estimator attains the bound.
void criterion2(Outcome& o) {
  const auto model = model_of(16, 2, 8, 0.5, 0.0, 0.1, 10.0, exponential_correlation(2, 0.25));
  const auto ens = SupportEnsemble::full(16, 2);
  Rng rng(102);
  const struct {
    const char* name;
    Matrix a;
  } cases[] = {{"lower-bound", design_lower_bound(model, ens).a}, {"gaussian", design_gaussian(model, rng).a}};
  for (const auto& c : cases) {
    const Decoder dec(model, c.a);
    const double bound = mse_lower_bound(model, ens, c.a).value;
    std::vector<double> err;
    for (int t = 0; t < 20000; ++t) {
      const SparseSample s = draw_sparse_sample(model, rng);
      const Vector y = simulate_channel(model, c.a, s.x, rng);
      err.push_back((dec.oracle(y, s.support).x_hat - s.x).squaredNorm());
    }
    const MeanSe m = mean_se(err);
    const double rel = std::abs(m.mean - bound) / bound;
    o.require(rel <= 0.05, std::string(c.name) + ": MC " + num(m.mean) + " vs bound " + num(bound) + " (rel " +
                               num(rel) + ")");
  }
}

// 3. Relaxed solver against the closed-form structures.
void criterion3(Outcome& o) {
  {
    const int n = 12, k = 2;
    const double sx2 = 1.0;
    const auto model = model_of(n, k, 6, 0.5, 0.0, 0.1, 10.0, sx2 * Matrix::Identity(k, k));
    const auto ens = SupportEnsemble::full(n, k);
    const double alpha = model.p() / (k * sx2 + n * 0.0);
    const Matrix target = alpha * Matrix::Identity(n, n);
    Rng rng(103);
    for (int start = 0; start < 2; ++start) {
      SdrOptions opts;
      if (start == 1) opts.initial = random_feasible(model, rng, 0.5);
      const SdrResult res = solve_sdr(model, ens, opts);
      const double dev = (res.candidate.q - target).norm() / target.norm();
      const double slack = std::abs(res.candidate.residuals.power_slack) / model.p();
      o.require(dev <= 1e-3 && slack <= 1e-6, std::string("case I (") + (start ? "random" : "default") +
                                                  " start) ||Q-aI||/||aI|| " + num(dev) + ", power slack " + num(slack));
    }
  }
  {
    Rng rng(104);
    const int n = 8;
    const Matrix h = rng.gaussian(n, n) + 2.0 * Matrix::Identity(n, n);
    const auto model = model_of(n, 2, 4, 0.5, 0.0, 0.1, 10.0, Matrix::Identity(2, 2), h);
    const SdrResult res = solve_sdr(model, SupportEnsemble::full(n, 2));
    const Matrix b = h.transpose() * res.candidate.q * h;
    const double s = b.trace() / n;
    const double dev = (b - s * Matrix::Identity(n, n)).norm() / (s * std::sqrt(double(n)));
    o.require(dev <= 1e-3, "case II ||H^T Q H - sI|| / ||sI|| " + num(dev));
  }
  {
    const double sw = 0.1;
    const auto model = model_of(12, 2, 6, sw * 1e-3, 0.0, sw, 10.0, exponential_correlation(2, 0.5));
    const SdrResult res = solve_sdr(model, SupportEnsemble::full(12, 2));
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(res.candidate.q).eigenvalues();
    const double ratio = ev(ev.size() - 2) / ev(ev.size() - 1);
    o.require(ratio <= 1e-3, "case IV lambda2/lambda1 " + num(ratio));
  }
}

// 4. Gram-form objective equals the bound.
void criterion4(Outcome& o) {
  Rng rng(105);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 4 + t % 5;
    const int k = 1 + t % 3;
    const int l = n + (t % 3) - 1;
    const int m = 1 + t % l;
    const double sv = t % 4 == 0 ? 0.0 : 0.05 + 0.4 * rng.uniform();
    const auto model = model_of(n, std::min(k, n), std::min(m, l), 0.2 + rng.uniform(), sv,
                                0.05 + 0.4 * rng.uniform(), 1.0 + rng.uniform(),
                                exponential_correlation(std::min(k, n), 0.8 * rng.uniform()), rng.gaussian(l, n));
    const auto ens = SupportEnsemble::full(n, model.k());
    const Matrix a = rng.gaussian(model.m(), l);
    const double b = mse_lower_bound(model, ens, a).value;
    const double f = relaxed_objective(model, ens, a.transpose() * a);
    worst = std::max(worst, std::abs(f - b) / b);
  }
  o.require(worst <= 1e-10, "max relative gap over 100 pairs " + num(worst));
}

// 5. Analytic gradient against central differences.
void criterion5(Outcome& o) {
  Rng rng(106);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double sv = t % 2 ? 0.15 : 0.0;
    const auto model = model_of(6, 2, 3, 0.4 + rng.uniform(), sv, 0.1 + 0.2 * rng.uniform(), 3.0,
                                exponential_correlation(2, 0.7 * rng.uniform()));
    const auto ens = SupportEnsemble::full(6, 2);
    // Keep Q well inside the PSD cone so the difference stencil stays feasible.
    const double floor = 0.2 * model.p() / model.power_weight().trace();
    const Matrix q = random_feasible(model, rng, 0.2 + 0.5 * rng.uniform()) + floor * Matrix::Identity(6, 6);
    const Matrix g = relaxed_gradient(model, ens, q);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j <= i; ++j) {
        const double h = 1e-5 * (1.0 + std::abs(q(i, j)));
        Matrix e = Matrix::Zero(6, 6);
        e(i, j) = 1.0;
        e(j, i) = 1.0;
        const double fd =
            (relaxed_objective(model, ens, q + h * e) - relaxed_objective(model, ens, q - h * e)) / (2.0 * h);
        const double analytic = i == j ? g(i, i) : 2.0 * g(i, j);
        worst = std::max(worst, std::abs(fd - analytic) / std::abs(analytic));
      }
    }
  }
  o.require(worst <= 1e-5, "max entrywise relative error " + num(worst));
}

// 6. Canonical Schur-complement witnesses satisfy the LMIs.
void criterion6(Outcome& o) {
  Rng rng(107);
  const auto model = model_of(7, 2, 3, 0.6, 0.2, 0.15, 3.0, exponential_correlation(2, 0.4));
  const auto ens = SupportEnsemble::full(7, 2);
  double min_eig = std::numeric_limits<double>::infinity();
  double worst = 0.0;
  bool feasible = true;
  for (int t = 0; t < 20; ++t) {
    const Matrix q = random_feasible(model, rng, rng.uniform());
    const LmiReport rep = verify_lmi_witness(model, ens, q, canonical_witness(model, ens, q));
    feasible = feasible && rep.feasible;
    min_eig = std::min({min_eig, rep.min_support_block_eig, rep.y_block_min_eig});
    const double target = ens.size() * relaxed_objective(model, ens, q);
    worst = std::max(worst, std::abs(rep.sum_trace_x - target) / target);
  }
  o.require(feasible && min_eig >= -1e-8, "min block eigenvalue " + num(min_eig));
  o.require(worst <= 1e-8, "sum Tr X_S vs objective, max rel. error " + num(worst));
}

double nmse_of(const ExperimentRun& run, const std::string& design, double value, Outcome& o) {
  const PointResult* r = run.find(design, value);
  if (!r || r->status != "ok") {
    o.require(false, design + " at " + num(value) + " missing or failed");
    return std::numeric_limits<double>::quiet_NaN();
  }
  return r->nmse;
}

ExperimentRun figure_run(const std::string& fig) {
  ExperimentConfig cfg = figure_config(fig);
  cfg.trials = 500;
  return run_sweep(cfg);
}

// 7. Figure-2 ordering.
void criterion7(Outcome& o) {
  const ExperimentRun run = figure_run("fig2");
  for (double m : {12.0, 18.0, 24.0}) {
    const double lb = nmse_of(run, "lower-bound", m, o);
    for (const char* b : {"upper-bound", "gaussian", "tight-frame"}) {
      const double v = nmse_of(run, b, m, o);
      o.require(lb <= v, "M=" + num(m) + " lower-bound " + num(db(lb)) + " dB <= " + b + " " + num(db(v)) + " dB");
    }
  }
  bool below = true;
  for (const auto& r : run.records) {
    if (r.design == kAnalyticBoundName) continue;
    const double bound = nmse_of(run, kAnalyticBoundName, r.value, o);
    below = below && bound <= r.nmse;
  }
  o.require(below, "analytic curve below every empirical curve at all M");
}

// 8. Figure-3 gap at P = 10 dB.
void criterion8(Outcome& o) {
  const ExperimentRun run = figure_run("fig3");
  const double lb = db(nmse_of(run, "lower-bound", 10.0, o));
  for (const char* b : {"gaussian", "upper-bound"}) {
    const double v = db(nmse_of(run, b, 10.0, o));
    o.require(v - lb >= 3.0, std::string("gap to ") + b + " " + num(v - lb) + " dB >= 3");
  }
}

// 9. Figure-4 gap at CSNR = 20 dB.
void criterion9(Outcome& o) {
  const ExperimentRun run = figure_run("fig4");
  const double lb = db(nmse_of(run, "lower-bound", 20.0, o));
  const double gauss = db(nmse_of(run, "gaussian", 20.0, o));
  const double ub = db(nmse_of(run, "upper-bound", 20.0, o));
  o.require(gauss - lb >= 4.0, "gap to gaussian " + num(gauss - lb) + " dB >= 4");
  o.require(ub - lb >= 5.0, "gap to upper-bound " + num(ub - lb) + " dB >= 5");
}

// 10. Sampled objective and the Figure-5 desk ordering.
void criterion10(Outcome& o) {
  const auto model = model_of(16, 2, 8, 0.5, 0.0, 0.1, 10.0, exponential_correlation(2, 0.25));
  Rng rng(110);
  const Matrix a = design_gaussian(model, rng).a;
  const double full = mse_lower_bound(model, SupportEnsemble::full(16, 2), a).value;
  double mean = 0.0;
  for (int s = 0; s < 200; ++s) mean += mse_lower_bound_sampled(model, 30, 5000 + s, a).value / 200.0;
  const double rel = std::abs(mean - full) / full;
  o.require(rel <= 0.02, "sampled mean over 200 seeds, rel. error " + num(rel));

  const ExperimentRun run = figure_run("fig5");
  for (double m : run.config.sweep_values) {
    const double lb = nmse_of(run, "lower-bound", m, o);
    std::ostringstream line;
    line << "M=" << m << " lower-bound " << num(db(lb)) << " dB vs";
    bool ok = true;
    for (const char* b : {"gaussian", "tight-frame", "upper-bound", "randomized"}) {
      const double v = nmse_of(run, b, m, o);
      ok = ok && lb <= v;
      line << ' ' << b << ' ' << num(db(v));
    }
    o.require(ok, line.str());
  }
}

// 11. Estimator hierarchy.
void criterion11(Outcome& o) {
  const auto model = model_of(10, 2, 6, 0.5, 0.0, 0.1, 10.0, exponential_correlation(2, 0.25));
  Rng rng(111);
  const Matrix a = design_lower_bound(model, SupportEnsemble::full(10, 2)).a;
  const Decoder dec(model, a);
  std::vector<double> mmse, romp, omp, lin;
  double worst_sum = 0.0;
  for (int t = 0; t < 5000; ++t) {
    const SparseSample s = draw_sparse_sample(model, rng);
    const Vector y = simulate_channel(model, a, s.x, rng);
    const Reconstruction r = dec.mmse_exhaustive(y);
    const double sum = std::accumulate(r.weights->begin(), r.weights->end(), 0.0);
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    mmse.push_back((r.x_hat - s.x).squaredNorm());
    romp.push_back((dec.random_omp(y, {}, rng).x_hat - s.x).squaredNorm());
    omp.push_back((dec.omp(y).x_hat - s.x).squaredNorm());
    lin.push_back((dec.lmmse(y).x_hat - s.x).squaredNorm());
  }
  const MeanSe e_mmse = mean_se(mmse), e_romp = mean_se(romp), e_omp = mean_se(omp), e_lin = mean_se(lin);
  o.require(e_mmse.mean <= e_romp.mean, "mmse " + num(e_mmse.mean) + " <= romp " + num(e_romp.mean));
  o.require(e_romp.mean <= e_omp.mean + 3.0 * e_omp.se,
            "romp " + num(e_romp.mean) + " <= omp " + num(e_omp.mean) + " + 3 se " + num(3.0 * e_omp.se));
  o.require(e_mmse.mean <= e_lin.mean, "mmse <= lmmse " + num(e_lin.mean));
  o.require(worst_sum <= 1e-12, "weights sum to 1, max deviation " + num(worst_sum));
}

// 12. Power normalization and byte-identical reruns.
void criterion12(Outcome& o) {
  double worst = 0.0;
  auto check = [&](const SystemModel& model, const Matrix& a) {
    worst = std::max(worst, std::abs(transmit_power(model, a) - model.p()) / model.p());
  };
  Rng rng(112);
  const auto general = model_of(12, 2, 5, 0.5, 0.1, 0.1, 10.0, exponential_correlation(2, 0.3));
  const auto ens = SupportEnsemble::full(12, 2);
  check(general, design_lower_bound(general, ens).a);
  check(general, design_upper_bound(general).a);
  check(general, design_gaussian(general, rng).a);
  check(general, design_tight_frame(general, rng).a);
  check(general, design_randomized(general, ens, solve_sdr(general, ens).candidate.q, 100, rng).a);
  const auto white = model_of(12, 2, 5, 0.5, 0.1, 0.1, 10.0);
  check(white, closed_form_case1(white).a);
  const Matrix h = rng.gaussian(12, 12) + 3.0 * Matrix::Identity(12, 12);
  const auto square = model_of(12, 2, 5, 0.5, 0.0, 0.1, 10.0, Matrix::Identity(2, 2), h);
  check(square, closed_form_case2(square).a);
  const auto no_w = model_of(12, 2, 5, 0.5, 0.1, 0.0, 10.0);
  check(no_w, closed_form_case3(no_w).a);
  const auto low = model_of(12, 2, 5, 1e-4, 0.0, 0.1, 10.0, exponential_correlation(2, 0.5));
  check(low, closed_form_case4(low, ens).a);
  o.require(worst <= 1e-9, "max relative power error over all designers " + num(worst));

  ExperimentConfig cfg = figure_config("fig2");
  cfg.sweep_values = {12, 18};
  cfg.trials = 100;
  std::ostringstream a, b;
  write_results_csv(a, run_sweep(cfg));
  cfg.threads = 1;
  write_results_csv(b, run_sweep(cfg));
  o.require(a.str() == b.str(), "identical seeds give byte-identical results.csv");
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"combinatorial identities", criterion1},
      {"bound consistency", criterion2},
      {"closed-form agreement", criterion3},
      {"objective equivalence", criterion4},
      {"gradient correctness", criterion5},
      {"LMI witness", criterion6},
      {"figure-2 ordering", criterion7},
      {"figure-3 gap", criterion8},
      {"figure-4 gap", criterion9},
      {"sampled objective and figure-5 ordering", criterion10},
      {"estimator hierarchy", criterion11},
      {"power normalization and determinism", criterion12},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("%s %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", index, name, secs, o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
