#include "csdesign/designer.hpp"
#include "csdesign/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace csd;

namespace {

SystemModel model_of(int n, int k, int m, double g, double sv, double sw, double p, Matrix r = {}) {
  ModelParams mp;
  mp.n = n;
  mp.k = k;
  mp.m = m;
  mp.g = g;
  mp.sigma_v = sv;
  mp.sigma_w = sw;
  mp.p = p;
  mp.r = r.size() ? r : Matrix::Identity(k, k);
  return SystemModel(mp);
}

// Per-support trace straight from the definition, explicit inverses.
double brute_force_bound(const SystemModel& model, const Matrix& a) {
  const auto ens = SupportEnsemble::full(model.n(), model.k());
  const Matrix rn = noise_covariance(model, a);
  const Matrix phi = a * model.h();
  double sum = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const Matrix e = selection_matrix(ens[i], model.n());
    const Matrix ps = phi * e;
    const Matrix inner = model.r().inverse() + model.g() * model.g() * ps.transpose() * rn.inverse() * ps;
    sum += inner.inverse().trace();
  }
  return sum / static_cast<double>(ens.size());
}

}  // namespace

TEST_CASE("lower bound without information is Tr(R)") {
  const Matrix r = exponential_correlation(3, 0.4) * 1.7;
  const auto model = model_of(7, 3, 4, 0.5, 0.0, 0.1, 1.0, r);
  const auto ens = SupportEnsemble::full(7, 3);
  CHECK(mse_lower_bound(model, ens, Matrix::Zero(4, 7)).value == doctest::Approx(r.trace()));
  const auto iso = model_of(7, 3, 4, 0.5, 0.0, 0.1, 1.0, 2.0 * Matrix::Identity(3, 3));
  CHECK(mse_lower_bound(iso, ens, Matrix::Zero(4, 7)).value == doctest::Approx(6.0));
}

TEST_CASE("lower bound on the noiseless-channel truncated identity") {
  const double sx2 = 1.3;
  const double sv = 0.6;
  const int n = 8, k = 3, m = 4;
  const auto model = model_of(n, k, m, 0.7, sv, 0.0, 1.0, sx2 * Matrix::Identity(k, k));
  Matrix a = Matrix::Zero(m, n);
  a.leftCols(m).setIdentity();
  a *= 2.5;
  const auto ens = SupportEnsemble::full(n, k);
  const BoundReport rep = mse_lower_bound(model, ens, a, true);
  const double observed = sx2 * sv * sv / (sx2 + sv * sv);
  for (const auto& [s, term] : rep.per_support_terms) {
    const auto k1 = std::count_if(s.begin(), s.end(), [&](int i) { return i < m; });
    CHECK(term == doctest::Approx(k1 * observed + (k - k1) * sx2).epsilon(1e-10));
  }
}

TEST_CASE("lower bound brute force, K = 1") {
  const auto model = model_of(4, 1, 2, 0.8, 0.3, 0.2, 1.0, Matrix::Constant(1, 1, 1.5));
  Rng rng(7);
  const Matrix a = rng.gaussian(2, 4);
  const Matrix rn = noise_covariance(model, a);
  double expected = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Vector ai = a.col(i);
    expected += 1.0 / (1.0 / 1.5 + 0.64 * ai.dot(rn.ldlt().solve(ai))) / 4.0;
  }
  const auto ens = SupportEnsemble::full(4, 1);
  CHECK(mse_lower_bound(model, ens, a).value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("lower bound matches brute force with a general channel") {
  ModelParams p;
  p.n = 6;
  p.k = 2;
  p.l = 5;
  p.m = 3;
  p.g = 0.9;
  p.sigma_v = 0.2;
  p.sigma_w = 0.15;
  p.r = exponential_correlation(2, 0.5);
  Rng rng(8);
  p.h = rng.gaussian(5, 6);
  const SystemModel model(p);
  const Matrix a = rng.gaussian(3, 5);
  const auto ens = SupportEnsemble::full(6, 2);
  const BoundReport rep = mse_lower_bound(model, ens, a, true);
  CHECK(rep.value == doctest::Approx(brute_force_bound(model, a)).epsilon(1e-10));
  double mean = 0.0;
  for (const auto& t : rep.per_support_terms) mean += t.second / rep.per_support_terms.size();
  CHECK(rep.value == doctest::Approx(mean).epsilon(1e-12));
  CHECK(rep.ensemble_kind == SupportEnsemble::Kind::Full);
}

TEST_CASE("sampled lower bound") {
  const auto model = model_of(16, 2, 8, 0.5, 0.0, 0.1, 10.0, exponential_correlation(2, 0.3));
  Rng rng(9);
  const Matrix a = power_rescale(model, rng.gaussian(8, 16)).a;
  const double full = mse_lower_bound(model, SupportEnsemble::full(16, 2), a).value;

  CHECK(mse_lower_bound_sampled(model, 120, 4, a).value == full);

  const auto one = mse_lower_bound_sampled(model, 1, 5, a, true);
  REQUIRE(one.per_support_terms.size() == 1u);
  const auto single = SupportEnsemble::from_supports(16, 2, {one.per_support_terms[0].first});
  CHECK(one.value == mse_lower_bound(model, single, a).value);
  CHECK(one.ensemble_kind == SupportEnsemble::Kind::Sampled);

  double mean = 0.0;
  double sq = 0.0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    const double v = mse_lower_bound_sampled(model, 30, 1000 + s, a).value;
    mean += v / seeds;
    sq += v * v / seeds;
  }
  CHECK(std::abs(mean - full) / full < 0.02);
  const double se = std::sqrt((sq - mean * mean) / seeds);
  CHECK(std::abs(mean - full) < 3.0 * se + 1e-12);
  CHECK_THROWS_AS(mse_lower_bound_sampled(model, 0, 1, a), ParameterError);
}

TEST_CASE("lmmse mse") {
  const Matrix r = exponential_correlation(2, 0.6);
  const auto model = model_of(5, 2, 3, 0.5, 0.1, 0.2, 1.0, r);
  CHECK(lmmse_mse(model, Matrix::Zero(3, 5)) == doctest::Approx(r.trace()));

  const double sx2 = 2.0, g = 0.7, sv = 0.3, sw = 0.4, a = 1.9;
  const auto scalar = model_of(1, 1, 1, g, sv, sw, 1.0, Matrix::Constant(1, 1, sx2));
  const double expected = 1.0 / (1.0 / sx2 + g * g * a * a / (g * g * sv * sv * a * a + sw * sw));
  CHECK(lmmse_mse(scalar, Matrix::Constant(1, 1, a)) == doctest::Approx(expected));

  Rng rng(10);
  const auto ens = SupportEnsemble::full(5, 2);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = rng.gaussian(3, 5) * (0.2 + rng.uniform());
    CHECK(mse_lower_bound(model, ens, x).value <= lmmse_mse(model, x) + 1e-12);
  }
}

TEST_CASE("transmit power") {
  const int n = 10, k = 2, m = 4;
  const double sx2 = 1.5, sv = 0.3;
  const auto model = model_of(n, k, m, 1.0, sv, 0.1, 1.0, sx2 * Matrix::Identity(k, k));
  CHECK(transmit_power(model, Matrix::Zero(m, n)) == 0.0);
  Rng rng(11);
  const Matrix rows = haar_orthogonal(n, rng).topRows(m);
  CHECK(transmit_power(model, rows) == doctest::Approx(m * (sx2 * k / n + sv * sv)));
}

TEST_CASE("nmse") {
  std::vector<Vector> x{Vector::Ones(4), Vector::LinSpaced(4, 0, 3)};
  CHECK(nmse(x, x, 2) == 0.0);
  std::vector<Vector> zero{Vector::Zero(4), Vector::Zero(4)};
  CHECK(nmse(x, zero, 2) == doctest::Approx((4.0 + 14.0) / 2.0 / 2.0));
  std::vector<Vector> t{Vector::Zero(5)};
  Vector e = Vector::Zero(5);
  e(0) = 1;
  e(1) = 1;
  CHECK(nmse(t, {e}, 2) == doctest::Approx(1.0));
  CHECK(to_db(0.1) == doctest::Approx(-10.0));
  CHECK_THROWS_AS(nmse(t, {}, 2), ParameterError);
}

TEST_CASE("mutual coherence") {
  CHECK(mutual_coherence(Matrix::Identity(3, 3)).value == 0.0);
  Matrix dup(2, 3);
  dup << 1, 2, 1, 3, 0.5, 3;
  CHECK(mutual_coherence(dup).value == doctest::Approx(1.0));
  Matrix a(2, 3);
  a << 1, 0, 1, 0, 1, 1;
  CHECK(mutual_coherence(a).value == doctest::Approx(1.0 / std::sqrt(2.0)));
  Matrix z(2, 3);
  z << 1, 0, 0, 0, 0, 1;
  const auto rep = mutual_coherence(z);
  CHECK(rep.skipped_zero_columns == 1);
  CHECK(rep.value == 0.0);
}

TEST_CASE("frame potential") {
  Rng rng(12);
  CHECK(frame_potential(haar_orthogonal(5, rng)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(frame_potential(Matrix::Zero(3, 7)) == doctest::Approx(std::sqrt(7.0)));
  const int n = 9, m = 4;
  const double c = 1.7;
  const Matrix tf = c * haar_orthogonal(m, rng) * haar_orthogonal(n, rng).leftCols(m).transpose();
  CHECK(frame_potential(tf) == doctest::Approx(std::sqrt((n - m) + m * (c * c - 1) * (c * c - 1))));
}

TEST_CASE("bound invariants") {
  const auto model = model_of(8, 2, 4, 0.6, 0.0, 0.2, 1.0, exponential_correlation(2, 0.3));
  const auto ens = SupportEnsemble::full(8, 2);
  Rng rng(13);
  for (int t = 0; t < 10; ++t) {
    const Matrix a = rng.gaussian(4, 8);
    const double b1 = mse_lower_bound(model, ens, a).value;
    CHECK(mse_lower_bound(model, ens, 2.0 * a).value <= b1);
    CHECK(b1 < model.r().trace());
    const Matrix u = haar_orthogonal(4, rng);
    CHECK(mse_lower_bound(model, ens, u * a).value == doctest::Approx(b1).epsilon(1e-10));
  }
}

TEST_CASE("noise-free system has no finite bound") {
  const auto model = model_of(4, 1, 2, 1.0, 0.0, 0.0, 1.0);
  CHECK_THROWS_AS(mse_lower_bound(model, SupportEnsemble::full(4, 1), Matrix::Ones(2, 4)), NumericalError);
}
