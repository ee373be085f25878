#include "csdesign/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace csd {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw ParameterError(what);
}

bool is_symmetric(const Matrix& m, double tol) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + m.cwiseAbs().maxCoeff());
}

// Advances `s` to the next K-subset of {0..n-1} in lexicographic order.
bool next_combination(std::vector<int>& s, int n) {
  const int k = static_cast<int>(s.size());
  int i = k - 1;
  while (i >= 0 && s[i] == n - k + i) --i;
  if (i < 0) return false;
  ++s[i];
  for (int j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  return true;
}

}  // namespace

SystemModel::SystemModel(ModelParams params) : params_(std::move(params)) { derive(std::nullopt); }

void SystemModel::derive(std::optional<Matrix> rx_override) {
  auto& p = params_;
  if (p.l == 0) p.l = p.n;
  require(p.n >= 1, "n must be positive");
  require(p.k >= 1 && p.k <= p.n, "k must satisfy 1 <= k <= n");
  require(p.l >= 1, "l must be positive");
  require(p.m >= 1 && p.m <= p.l, "m must satisfy 1 <= m <= l");
  require(std::isfinite(p.g) && p.g > 0.0, "g must be positive");
  require(std::isfinite(p.sigma_v) && p.sigma_v >= 0.0, "sigma_v must be nonnegative");
  require(std::isfinite(p.sigma_w) && p.sigma_w >= 0.0, "sigma_w must be nonnegative");
  require(std::isfinite(p.p) && p.p > 0.0, "power budget p must be positive");
  if (p.h.size() == 0) {
    require(p.l == p.n, "an empty H means identity and requires l == n");
    p.h = Matrix::Identity(p.n, p.n);
  }
  require(p.h.rows() == p.l && p.h.cols() == p.n, "H must be l x n");
  h_identity_ = p.h.isIdentity(0.0);
  if (p.r.size() == 0) p.r = Matrix::Identity(p.k, p.k);
  require(p.r.rows() == p.k && p.r.cols() == p.k, "R must be k x k");
  require(is_symmetric(p.r, 1e-12), "R must be symmetric");
  p.r = symmetrized(p.r);

  Eigen::LLT<Matrix> llt(p.r);
  if (llt.info() != Eigen::Success || min_eigenvalue(p.r) <= 0.0) {
    throw ParameterError("R must be positive definite");
  }
  r_chol_ = llt.matrixL();
  r_inv_ = symmetrized(llt.solve(Matrix::Identity(p.k, p.k)));

  if (rx_override) {
    require(rx_override->rows() == p.n && rx_override->cols() == p.n, "R_x override must be n x n");
    rx_ = symmetrized(*rx_override);
  } else {
    rx_ = source_covariance_exact(p.r, p.n);
  }
  power_weight_ = symmetrized(p.h * rx_ * p.h.transpose());
  power_weight_.diagonal().array() += p.sigma_v * p.sigma_v;
}

SystemModel SystemModel::with_m(int m) const {
  SystemModel out = *this;
  out.params_.m = m;
  out.derive(rx_);
  return out;
}

SystemModel SystemModel::with_power(double power) const {
  SystemModel out = *this;
  out.params_.p = power;
  out.derive(rx_);
  return out;
}

SystemModel SystemModel::with_gain(double g) const {
  SystemModel out = *this;
  out.params_.g = g;
  out.derive(rx_);
  return out;
}

SystemModel SystemModel::with_source_covariance(const Matrix& rx) const {
  SystemModel out = *this;
  out.derive(rx);
  return out;
}

SupportEnsemble SupportEnsemble::full(int n, int k) {
  require(n >= 1 && k >= 1 && k <= n, "support ensemble needs 1 <= k <= n");
  const double count = binomial(n, k);
  if (count > kMaxFull) {
    std::ostringstream os;
    os << "C(" << n << "," << k << ") = " << count << " exceeds the full-enumeration limit; use a sampled ensemble";
    throw ParameterError(os.str());
  }
  SupportEnsemble e(n, k, Kind::Full, 0);
  e.indices_.reserve(static_cast<std::size_t>(count) * static_cast<std::size_t>(k));
  std::vector<int> s(static_cast<std::size_t>(k));
  std::iota(s.begin(), s.end(), 0);
  do {
    e.indices_.insert(e.indices_.end(), s.begin(), s.end());
  } while (next_combination(s, n));
  return e;
}

SupportEnsemble SupportEnsemble::sampled(int n, int k, int count, std::uint64_t seed) {
  require(n >= 1 && k >= 1 && k <= n, "support ensemble needs 1 <= k <= n");
  const double total = binomial(n, k);
  require(count >= 1, "sampled ensemble size must be at least 1");
  require(static_cast<double>(count) <= total, "sampled ensemble size exceeds C(n, k)");
  Rng rng(seed);
  std::vector<Support> picked;
  if (total <= kMaxFull && 2.0 * count > total) {
    // Dense regime: partial Fisher-Yates over the full enumeration.
    const SupportEnsemble all = full(n, k);
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i), static_cast<int>(order.size() - 1)));
      std::swap(order[i], order[j]);
      const auto s = all[order[i]];
      picked.emplace_back(s.begin(), s.end());
    }
  } else {
    std::set<Support> seen;
    while (picked.size() < static_cast<std::size_t>(count)) {
      Support s = rng.k_subset(n, k);
      if (seen.insert(s).second) picked.push_back(std::move(s));
    }
  }
  // Lexicographic storage makes every reduction over the ensemble follow the
  // same order as the full enumeration.
  std::sort(picked.begin(), picked.end());
  SupportEnsemble e(n, k, Kind::Sampled, seed);
  e.indices_.reserve(picked.size() * static_cast<std::size_t>(k));
  for (const auto& s : picked) e.indices_.insert(e.indices_.end(), s.begin(), s.end());
  return e;
}

SupportEnsemble SupportEnsemble::from_supports(int n, int k, const std::vector<Support>& supports) {
  require(n >= 1 && k >= 1 && k <= n, "support ensemble needs 1 <= k <= n");
  require(!supports.empty(), "support list is empty");
  SupportEnsemble e(n, k, Kind::Sampled, 0);
  for (Support s : supports) {
    require(static_cast<int>(s.size()) == k, "support has wrong cardinality");
    std::sort(s.begin(), s.end());
    require(std::adjacent_find(s.begin(), s.end()) == s.end(), "support has repeated indices");
    require(s.front() >= 0 && s.back() < n, "support index out of range");
    e.indices_.insert(e.indices_.end(), s.begin(), s.end());
  }
  return e;
}

Matrix exponential_correlation(int k, double rho) {
  require(k >= 1, "k must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw ParameterError("rho must lie in [0, 1)");
  Matrix r(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) r(i, j) = std::pow(rho, std::abs(i - j));
  }
  return r;
}

Matrix selection_matrix(SupportView support, int n) {
  Matrix e = Matrix::Zero(n, static_cast<Eigen::Index>(support.size()));
  for (std::size_t c = 0; c < support.size(); ++c) {
    if (support[c] < 0 || support[c] >= n) throw ParameterError("support index out of range");
    e(support[c], static_cast<Eigen::Index>(c)) = 1.0;
  }
  return e;
}

Matrix source_covariance(const SystemModel& model, const SupportEnsemble& ensemble) {
  require(ensemble.n() == model.n() && ensemble.k() == model.k(), "ensemble does not match model dimensions");
  const int k = model.k();
  Matrix acc = Matrix::Zero(model.n(), model.n());
  for (std::size_t e = 0; e < ensemble.size(); ++e) {
    const auto s = ensemble[e];
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) acc(s[a], s[b]) += model.r()(a, b);
    }
  }
  return acc / static_cast<double>(ensemble.size());
}

Matrix source_covariance_exact(const Matrix& r, int n) {
  const int k = static_cast<int>(r.rows());
  require(r.cols() == k && k >= 1 && k <= n, "R must be k x k with k <= n");
  const double total = binomial(n, k);
  Matrix rx = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double d = 0.0;
    for (int a = 0; a < k; ++a) d += binomial(i, a) * binomial(n - 1 - i, k - 1 - a) * r(a, a);
    rx(i, i) = d / total;
    for (int j = i + 1; j < n; ++j) {
      double o = 0.0;
      for (int a = 0; a < k; ++a) {
        const double below = binomial(i, a);
        if (below == 0.0) continue;
        for (int b = a + 1; b < k; ++b) {
          o += below * binomial(j - i - 1, b - a - 1) * binomial(n - 1 - j, k - 1 - b) * r(a, b);
        }
      }
      rx(i, j) = rx(j, i) = o / total;
    }
  }
  return rx;
}

Matrix empirical_source_covariance(const SystemModel& model, int draws, Rng& rng) {
  require(draws >= 1, "draws must be positive");
  Matrix acc = Matrix::Zero(model.n(), model.n());
  for (int t = 0; t < draws; ++t) {
    const SparseSample s = draw_sparse_sample(model, rng);
    for (std::size_t a = 0; a < s.support.size(); ++a) {
      for (std::size_t b = 0; b < s.support.size(); ++b) {
        acc(s.support[a], s.support[b]) += s.x(s.support[a]) * s.x(s.support[b]);
      }
    }
  }
  return acc / static_cast<double>(draws);
}

SparseSample draw_sparse_sample(const SystemModel& model, Rng& rng) {
  SparseSample out;
  out.support = rng.k_subset(model.n(), model.k());
  const Vector z = rng.gaussian(model.k());
  const Vector xs = model.r_chol() * z;
  out.x = Vector::Zero(model.n());
  for (int a = 0; a < model.k(); ++a) out.x(out.support[a]) = xs(a);
  return out;
}

Vector simulate_channel(const SystemModel& model, const Matrix& a, const Vector& x, Rng& rng) {
  const Vector v = model.sigma_v() > 0.0 ? rng.gaussian(model.l(), model.sigma_v()) : Vector::Zero(model.l());
  const Vector w = model.sigma_w() > 0.0 ? rng.gaussian(static_cast<int>(a.rows()), model.sigma_w())
                                         : Vector::Zero(a.rows());
  return simulate_channel(model, a, x, v, w);
}

Vector simulate_channel(const SystemModel& model, const Matrix& a, const Vector& x, const Vector& v,
                        const Vector& w) {
  require(a.cols() == model.l(), "A must have l columns");
  require(x.size() == model.n(), "x must have length n");
  require(v.size() == model.l(), "v must have length l");
  require(w.size() == a.rows(), "w must have length m");
  return model.g() * (a * (model.h() * x + v)) + w;
}

Matrix noise_covariance(const SystemModel& model, const Matrix& a) {
  require(a.cols() == model.l(), "A must have l columns");
  const double gv = model.g() * model.sigma_v();
  Matrix rn = gv * gv * (a * a.transpose());
  rn.diagonal().array() += model.sigma_w() * model.sigma_w();
  return symmetrized(rn);
}

}  // namespace csd
