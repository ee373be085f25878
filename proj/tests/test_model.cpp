#include "csdesign/designer.hpp"
#include "csdesign/model.hpp"

#include <doctest.h>

#include <set>

using namespace csd;

namespace {

SystemModel make_model(int n, int k, int m, double sv, double sw, Matrix r = {}, double g = 1.0) {
  ModelParams p;
  p.n = n;
  p.k = k;
  p.m = m;
  p.g = g;
  p.sigma_v = sv;
  p.sigma_w = sw;
  p.p = 1.0;
  p.r = r.size() ? r : Matrix::Identity(k, k);
  return SystemModel(p);
}

}  // namespace

TEST_CASE("exponential correlation") {
  CHECK(exponential_correlation(3, 0.0).isApprox(Matrix::Identity(3, 3)));
  Matrix r2(2, 2);
  r2 << 1, 0.5, 0.5, 1;
  CHECK(exponential_correlation(2, 0.5).isApprox(r2));
  const Matrix r3 = exponential_correlation(3, 0.25);
  CHECK(r3(0, 1) == doctest::Approx(0.25));
  CHECK(r3(1, 2) == doctest::Approx(0.25));
  CHECK(r3(0, 2) == doctest::Approx(0.0625));
  CHECK(r3(2, 0) == doctest::Approx(0.0625));
  CHECK_THROWS_AS(exponential_correlation(3, 1.0), ParameterError);
  CHECK_THROWS_AS(exponential_correlation(3, -0.1), ParameterError);
}

TEST_CASE("selection matrix") {
  const Support s1{0};
  Matrix e1(2, 1);
  e1 << 1, 0;
  CHECK(selection_matrix(s1, 2) == e1);
  const Support s2{1, 2};
  const Matrix e2 = selection_matrix(s2, 3);
  CHECK(e2.col(0) == Vector::Unit(3, 1));
  CHECK(e2.col(1) == Vector::Unit(3, 2));
  CHECK((e2.transpose() * e2) == Matrix::Identity(2, 2));
  const Support bad{3};
  CHECK_THROWS_AS(selection_matrix(bad, 3), ParameterError);
}

TEST_CASE("support ensembles") {
  const auto full = SupportEnsemble::full(6, 3);
  REQUIRE(full.size() == 20);
  std::set<Support> seen;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const Support s(full[i].begin(), full[i].end());
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    if (i > 0) CHECK(Support(full[i - 1].begin(), full[i - 1].end()) < s);
    seen.insert(s);
  }
  CHECK(seen.size() == 20);

  const auto sampled = SupportEnsemble::sampled(10, 2, 15, 3);
  CHECK(sampled.size() == 15);
  std::set<Support> distinct;
  for (std::size_t i = 0; i < sampled.size(); ++i) distinct.emplace(sampled[i].begin(), sampled[i].end());
  CHECK(distinct.size() == 15);

  // Sampling everything gives the full enumeration in the same order.
  const auto all = SupportEnsemble::sampled(6, 3, 20, 9);
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(Support(all[i].begin(), all[i].end()) == Support(full[i].begin(), full[i].end()));
  }
  CHECK_THROWS_AS(SupportEnsemble::sampled(6, 3, 21, 1), ParameterError);
  CHECK_THROWS_AS(SupportEnsemble::sampled(6, 3, 0, 1), ParameterError);
  CHECK_THROWS_AS(SupportEnsemble::full(60, 30), ParameterError);
}

TEST_CASE("combinatorial identities by enumeration") {
  for (int n = 1; n <= 12; ++n) {
    for (int k = 1; k <= std::min(4, n); ++k) {
      const auto ens = SupportEnsemble::full(n, k);
      Matrix acc = Matrix::Zero(n, n);
      for (std::size_t i = 0; i < ens.size(); ++i) {
        const Matrix e = selection_matrix(ens[i], n);
        REQUIRE((e.transpose() * e) == Matrix::Identity(k, k));
        acc += e * e.transpose();
      }
      CHECK(acc == binomial(n - 1, k - 1) * Matrix::Identity(n, n));
    }
  }
}

TEST_CASE("source covariance examples") {
  const double s2 = 2.5;
  Matrix r1(1, 1);
  r1 << s2;
  const auto m1 = make_model(2, 1, 1, 0.0, 0.1, r1);
  CHECK(source_covariance(m1, SupportEnsemble::full(2, 1)).isApprox(0.5 * s2 * Matrix::Identity(2, 2)));
  CHECK(m1.rx().isApprox(0.5 * s2 * Matrix::Identity(2, 2)));

  const auto m2 = make_model(4, 2, 2, 0.0, 0.1);
  CHECK(source_covariance(m2, SupportEnsemble::full(4, 2)).isApprox(0.5 * Matrix::Identity(4, 4)));

  const double rho = 0.3;
  const auto m3 = make_model(3, 2, 2, 0.0, 0.1, exponential_correlation(2, rho));
  const Matrix rx = source_covariance(m3, SupportEnsemble::full(3, 2));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(rx(i, j) == doctest::Approx(i == j ? 2.0 / 3.0 : rho / 3.0));
  }
}

TEST_CASE("exact source covariance matches enumeration") {
  for (int n : {5, 7, 9}) {
    for (int k : {1, 2, 3}) {
      const Matrix r = exponential_correlation(k, 0.6) + 0.1 * Matrix::Identity(k, k);
      const auto model = make_model(n, k, 1, 0.0, 0.1, r);
      const Matrix enumerated = source_covariance(model, SupportEnsemble::full(n, k));
      CHECK((source_covariance_exact(r, n) - enumerated).norm() <= 1e-12 * enumerated.norm());
      CHECK(model.rx().trace() == doctest::Approx(r.trace()));
    }
  }
}

TEST_CASE("sparse sample draws") {
  const auto model = make_model(10, 3, 4, 0.0, 0.1);
  Rng rng(11);
  const int draws = 100000;
  Vector inclusion = Vector::Zero(10);
  double on_support_sq = 0.0;
  for (int t = 0; t < draws; ++t) {
    const SparseSample s = draw_sparse_sample(model, rng);
    REQUIRE(s.support.size() == 3u);
    for (int i = 0; i < 10; ++i) {
      const bool in = std::find(s.support.begin(), s.support.end(), i) != s.support.end();
      if (in) {
        inclusion(i) += 1.0;
        on_support_sq += s.x(i) * s.x(i);
      } else {
        REQUIRE(s.x(i) == 0.0);
      }
    }
  }
  inclusion /= draws;
  // K/N = 0.3; binomial std sqrt(0.21/1e5) ~ 1.5e-3.
  for (int i = 0; i < 10; ++i) CHECK(inclusion(i) == doctest::Approx(0.3).epsilon(0.02));
  CHECK(on_support_sq / (3.0 * draws) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("empirical source covariance converges to the exact one") {
  const auto model = make_model(12, 3, 4, 0.0, 0.1, exponential_correlation(3, 0.5));
  Rng rng(5);
  const Matrix emp = empirical_source_covariance(model, 100000, rng);
  CHECK((emp - model.rx()).norm() / model.rx().norm() < 0.05);
}

TEST_CASE("channel simulation") {
  SUBCASE("noiseless identity chain") {
    const auto model = make_model(4, 2, 3, 0.0, 0.0);
    Rng rng(1);
    const Matrix a = rng.gaussian(3, 4);
    const Vector x = rng.gaussian(4);
    CHECK(simulate_channel(model, a, x, rng).isApprox(a * x));
  }
  SUBCASE("scalar chain with injected noise") {
    ModelParams p;
    p.n = p.k = p.m = 1;
    p.h = Matrix::Constant(1, 1, 0.7);
    p.g = 1.5;
    p.sigma_v = 0.2;
    p.sigma_w = 0.3;
    p.r = Matrix::Identity(1, 1);
    const SystemModel model(p);
    const Matrix a = Matrix::Constant(1, 1, 2.0);
    const Vector x = Vector::Constant(1, 0.4);
    const Vector v = Vector::Constant(1, -0.1);
    const Vector w = Vector::Constant(1, 0.05);
    CHECK(simulate_channel(model, a, x, v, w)(0) == doctest::Approx(1.5 * 2.0 * (0.7 * 0.4 - 0.1) + 0.05));
  }
  SUBCASE("empirical noise covariance") {
    const auto model = make_model(3, 1, 2, 0.5, 0.3);
    Rng rng(2);
    const Matrix a = rng.gaussian(2, 3);
    const Vector zero = Vector::Zero(3);
    Matrix acc = Matrix::Zero(2, 2);
    const int draws = 100000;
    for (int t = 0; t < draws; ++t) {
      const Vector y = simulate_channel(model, a, zero, rng);
      acc += y * y.transpose();
    }
    acc /= draws;
    const Matrix rn = noise_covariance(model, a);
    CHECK((acc - rn).norm() / rn.norm() < 0.02);
  }
  const auto model = make_model(4, 2, 3, 0.0, 0.1);
  Rng rng(3);
  CHECK_THROWS_AS(simulate_channel(model, Matrix::Zero(3, 5), Vector::Zero(4), rng), ParameterError);
}

TEST_CASE("noise covariance") {
  const auto m0 = make_model(3, 1, 2, 0.0, 0.2);
  Rng rng(4);
  const Matrix a = rng.gaussian(2, 3);
  CHECK(noise_covariance(m0, a).isApprox(0.04 * Matrix::Identity(2, 2)));

  const auto m1 = make_model(3, 1, 2, 0.5, 0.2);
  const Matrix orth = haar_orthogonal(3, rng).topRows(2);
  CHECK(noise_covariance(m1, orth).isApprox((0.25 + 0.04) * Matrix::Identity(2, 2), 1e-12));

  const auto m2 = make_model(2, 1, 1, 1.0, 0.1, {}, 2.0);
  Matrix a2(1, 2);
  a2 << 1, 1;
  CHECK(noise_covariance(m2, a2)(0, 0) == doctest::Approx(8.01));
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(make_model(3, 4, 2, 0.0, 0.1), ParameterError);
  CHECK_THROWS_AS(make_model(3, 1, 4, 0.0, 0.1), ParameterError);
  CHECK_THROWS_AS(make_model(3, 1, 2, -1.0, 0.1), ParameterError);
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(make_model(4, 2, 2, 0.0, 0.1, bad), ParameterError);
  Matrix asym(2, 2);
  asym << 1, 0.2, 0.1, 1;
  CHECK_THROWS_AS(make_model(4, 2, 2, 0.0, 0.1, asym), ParameterError);
}

TEST_CASE("rng streams are reproducible and independent of parent use") {
  Rng a(42);
  Rng b(42);
  a.normal();
  a.normal();
  Rng ca = a.split(7);
  Rng cb = b.split(7);
  for (int i = 0; i < 5; ++i) CHECK(ca.next_u64() == cb.next_u64());
  CHECK(Rng(42).split(1).seed() != Rng(42).split(2).seed());
  const Support s = Rng(3).k_subset(10, 4);
  CHECK(s.size() == 4u);
  CHECK(std::is_sorted(s.begin(), s.end()));
}
