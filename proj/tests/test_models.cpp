#include "smom/models.hpp"

#include <cmath>

#include "doctest.h"
#include "smom/samplers.hpp"

using namespace smom;

namespace {

// d/dtheta_j of grad_x log q~, central differences
Vector fd_mixed(const ModelSpec& m, const Vector& theta, int j, const Vector& x,
                double h = 1e-5) {
  Vector tp = theta, tm = theta;
  tp(j) += h;
  tm(j) -= h;
  return (m.grad_x_log(tp, x) - m.grad_x_log(tm, x)) / (2 * h);
}

Vector fd_grad_x(const ModelSpec& m, const Vector& theta, const Vector& x,
                 double h = 1e-6) {
  Vector g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (m.log_unnorm(theta, xp) - m.log_unnorm(theta, xm)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("generalized normal closures") {
  ModelSpec m = generalized_normal(2);
  CHECK(m.param_dim == 1);
  CHECK(m.domain == euclidean(1));
  CHECK(m.has_fisher());
  CHECK(m.has_sampler());

  Vector theta(1), x(1);
  theta << 0.7;
  x << 1.3;
  const double x4 = 1.3 * 1.3 * 1.3 * 1.3;
  CHECK(m.log_unnorm(theta, x) == doctest::Approx(-0.7 * x4).epsilon(1e-14));
  CHECK(m.grad_x_log(theta, x)(0) ==
        doctest::Approx(-0.7 * 4 * 1.3 * 1.3 * 1.3).epsilon(1e-14));
  CHECK((m.grad_x_log(theta, x) - fd_grad_x(m, theta, x)).norm() < 1e-6);

  VectorField f = m.mixed_score_field(theta, 0);
  CHECK(f(x)(0) == doctest::Approx(-4 * 1.3 * 1.3 * 1.3).epsilon(1e-14));
  CHECK((f(x) - fd_mixed(m, theta, 0, x)).norm() < 1e-7);
  CHECK(f.jacobian(x)(0, 0) == doctest::Approx(-12 * 1.3 * 1.3).epsilon(1e-14));
  CHECK(f.divergence(x) == doctest::Approx(-12 * 1.3 * 1.3).epsilon(1e-14));

  CHECK(m.fisher_score(theta, 0, x) ==
        doctest::Approx(1.0 / (4 * 0.7) - x4).epsilon(1e-14));
  CHECK(m.weight(x) == 1.0);
  CHECK(m.weight_grad(x).norm() == 0.0);
}

TEST_CASE("generalized normal unit-variance parameter") {
  CHECK(gn_theta_star(1) == doctest::Approx(0.5).epsilon(1e-14));
  // beta = 2: (Gamma(3/4) / Gamma(1/4))^2
  double g34 = std::tgamma(0.75), g14 = std::tgamma(0.25);
  CHECK(gn_theta_star(2) == doctest::Approx((g34 / g14) * (g34 / g14)).epsilon(1e-12));
  for (int beta : {1, 2, 4, 8}) CHECK(gn_theta_star(beta) > 0);
}

TEST_CASE("generalized gamma closures") {
  ModelSpec m = generalized_gamma(2);
  Vector theta(1), x(1);
  theta << 1.1;
  x << -0.8;
  CHECK(m.log_unnorm(theta, x) ==
        doctest::Approx(4 * std::log(0.8) - 1.1 * 0.64).epsilon(1e-14));
  CHECK((m.grad_x_log(theta, x) - fd_grad_x(m, theta, x)).norm() < 1e-6);
  VectorField f = m.mixed_score_field(theta, 0);
  CHECK(f(x)(0) == doctest::Approx(1.6).epsilon(1e-14));
  CHECK(f.divergence(x) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK((f(x) - fd_mixed(m, theta, 0, x)).norm() < 1e-7);
  CHECK(m.fisher_score(theta, 0, x) ==
        doctest::Approx(-0.64 + 5.0 / (2 * 1.1)).epsilon(1e-14));
}

TEST_CASE("multivariate normal packing roundtrip") {
  Vector mu(3);
  mu << 0.1, -0.2, 0.3;
  Matrix sigma(3, 3);
  sigma << 2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0;
  Vector theta = mvn_pack(mu, sigma);
  CHECK(theta.size() == 9);
  // layout: mu, diagonal, off-diagonal lexicographic
  CHECK(theta(0) == 0.1);
  CHECK(theta(3) == 2.0);
  CHECK(theta(5) == 1.0);
  CHECK(theta(6) == 0.3);   // (1,2)
  CHECK(theta(7) == 0.1);   // (1,3)
  CHECK(theta(8) == -0.2);  // (2,3)
  Vector mu2;
  Matrix sigma2;
  mvn_unpack(theta, 3, mu2, sigma2);
  CHECK((mu2 - mu).norm() == 0.0);
  CHECK((sigma2 - sigma).norm() == 0.0);
  CHECK_THROWS_AS(mvn_unpack(theta.head(5), 3, mu2, sigma2), InvalidShape);
}

TEST_CASE("multivariate normal closures against finite differences") {
  Vector mu(2);
  mu << 0.4, -0.1;
  Matrix sigma(2, 2);
  sigma << 1.3, 0.4, 0.4, 0.9;
  ModelSpec m = multivariate_normal(mu, sigma);
  CHECK(m.param_dim == 5);
  Vector theta = mvn_pack(mu, sigma);
  Vector x(2);
  x << 0.9, 0.7;

  CHECK((m.grad_x_log(theta, x) - fd_grad_x(m, theta, x)).norm() < 1e-6);
  for (int j = 0; j < 5; ++j) {
    VectorField f = m.mixed_score_field(theta, j);
    CHECK((f(x) - fd_mixed(m, theta, j, x)).norm() < 1e-6);
  }

  // full score: finite difference of log q~ - log Z, Z = (2 pi)^(p/2) sqrt(det sigma)
  auto log_norm = [](const Vector& th) {
    Vector mu_;
    Matrix s_;
    mvn_unpack(th, 2, mu_, s_);
    return 0.5 * std::log(s_.determinant());
  };
  const double h = 1e-6;
  for (int j = 0; j < 5; ++j) {
    Vector tp = theta, tm = theta;
    tp(j) += h;
    tm(j) -= h;
    double fd = (m.log_unnorm(tp, x) - log_norm(tp) - m.log_unnorm(tm, x) +
                 log_norm(tm)) /
                (2 * h);
    CHECK(m.fisher_score(theta, j, x) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("multivariate normal rejects bad sigma") {
  Vector mu = Vector::Zero(2);
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
  CHECK_THROWS_AS(multivariate_normal(mu, bad), NotSPD);
  ModelSpec m = multivariate_normal(mu, Matrix::Identity(2, 2));
  Vector theta = mvn_pack(mu, bad);
  Vector x = Vector::Zero(2);
  CHECK_THROWS_AS(m.log_unnorm(theta, x), NotSPD);
}

TEST_CASE("ppi sufficient statistics and ordering") {
  Vector beta = Vector::Constant(3, -0.5);
  ModelSpec m = ppi_model(beta, 3);
  CHECK(m.param_dim == 5);
  CHECK(m.domain == sphere_orthant(3));
  CHECK(m.has_sampler());

  Vector x(3);
  x << 0.2, 0.3, std::sqrt(1 - 0.04 - 0.09);
  auto& ef = *m.expfam;
  CHECK(ef.t(x, 0) == doctest::Approx(0.0016).epsilon(1e-14));        // x1^4
  CHECK(ef.t(x, 1) == doctest::Approx(0.0081).epsilon(1e-14));        // x2^4
  CHECK(ef.t(x, 2) == doctest::Approx(2 * 0.04 * 0.09).epsilon(1e-14));
  CHECK(ef.t(x, 3) == doctest::Approx(0.04).epsilon(1e-14));          // x1^2
  CHECK(ef.t(x, 4) == doctest::Approx(0.09).epsilon(1e-14));          // x2^2

  // base measure vanishes at beta = -1/2
  Vector theta = Vector::Zero(5);
  CHECK(m.log_unnorm(theta, x) == 0.0);
  CHECK(m.grad_x_log(theta, x).norm() == 0.0);

  CHECK(m.weight(x) == doctest::Approx(0.06 * x(2)).epsilon(1e-14));
  // weight gradient = partial products
  Vector wg = m.weight_grad(x);
  CHECK(wg(0) == doctest::Approx(0.3 * x(2)).epsilon(1e-14));
  CHECK(wg(1) == doctest::Approx(0.2 * x(2)).epsilon(1e-14));
  CHECK(wg(2) == doctest::Approx(0.06).epsilon(1e-14));
}

TEST_CASE("ppi gradients by finite differences") {
  Vector beta(3);
  beta << -0.3, -0.5, -0.4;  // nontrivial base measure
  ModelSpec m = ppi_model(beta, 3);
  CHECK(!m.has_sampler());  // sampler only for the vanishing base measure
  Vector theta(5);
  theta << 0.8, -0.5, 0.3, 1.2, -0.7;
  Vector x(3);
  x << 0.2, 0.3, std::sqrt(1 - 0.04 - 0.09);

  CHECK((m.grad_x_log(theta, x) - fd_grad_x(m, theta, x)).norm() < 1e-6);
  for (int j = 0; j < 5; ++j) {
    VectorField f = m.mixed_score_field(theta, j);
    // tangent field equals the projected parameter derivative of the score
    Vector fd = fd_mixed(m, theta, j, x);
    CHECK((f(x) - project_tangent(m.domain, x, fd)).norm() < 1e-7);
  }
  // weight gradient by finite differences
  Vector wg = m.weight_grad(x);
  for (int i = 0; i < 3; ++i) {
    Vector xp = x, xm = x;
    xp(i) += 1e-6;
    xm(i) -= 1e-6;
    CHECK(wg(i) == doctest::Approx((m.weight(xp) - m.weight(xm)) / 2e-6).epsilon(1e-6));
  }

  Matrix a;
  Vector mu;
  ppi_unpack(theta, 3, a, mu);
  CHECK(a(0, 0) == 0.8);
  CHECK(a(1, 1) == -0.5);
  CHECK(a(0, 1) == 0.3);
  CHECK(a(1, 0) == 0.3);
  CHECK(a.row(2).norm() == 0.0);
  CHECK(mu(0) == 1.2);
  CHECK(mu(1) == -0.7);
  CHECK(mu(2) == 0.0);
  CHECK((ppi_pack(a, mu) - theta).norm() == 0.0);
}

TEST_CASE("bingham sufficient statistics and ordering") {
  ModelSpec m = matrix_bingham(3, 2);
  CHECK(m.param_dim == 5);
  CHECK(m.domain == stiefel(3, 2));

  Vector x(6);  // [[1,0],[0,1],[0,0]] column-major
  x << 1, 0, 0, 0, 1, 0;
  auto& ef = *m.expfam;
  CHECK(ef.t(x, 0) == 1.0);  // (XX')_11
  CHECK(ef.t(x, 1) == 1.0);  // (XX')_22
  CHECK(ef.t(x, 2) == 0.0);  // 2 (XX')_12
  CHECK(ef.t(x, 3) == 0.0);
  CHECK(ef.t(x, 4) == 0.0);

  Vector theta(5);
  theta << 0.6, -0.4, 0.2, 0.1, -0.3;
  CHECK(m.log_unnorm(theta, x) == doctest::Approx(0.2).epsilon(1e-14));

  Matrix a = bingham_unpack(theta, 3);
  CHECK(a(0, 0) == 0.6);
  CHECK(a(1, 1) == -0.4);
  CHECK(a(2, 2) == 0.0);
  CHECK(a(0, 1) == 0.2);
  CHECK(a(0, 2) == 0.1);
  CHECK(a(1, 2) == -0.3);
  CHECK((bingham_pack(a) - theta).norm() == 0.0);

  // direct check: log q~ = tr(X' A X) at a generic point
  Vector raw(6);
  raw << 0.3, -0.8, 0.5, 1.1, 0.2, -0.6;
  Vector x0 = (Vector(6) << 1, 0, 0, 0, 1, 0).finished();
  Vector xg = retract(m.domain, x0, project_tangent(m.domain, x0, raw), 0.3);
  Eigen::Map<const Matrix> xm(xg.data(), 3, 2);
  CHECK(m.log_unnorm(theta, xg) ==
        doctest::Approx((xm.transpose() * a * xm).trace()).epsilon(1e-12));
  CHECK((m.grad_x_log(theta, xg) - fd_grad_x(m, theta, xg)).norm() < 1e-6);
  for (int j = 0; j < 5; ++j) {
    VectorField f = m.mixed_score_field(theta, j);
    Vector fd = fd_mixed(m, theta, j, xg);
    CHECK((f(xg) - project_tangent(m.domain, xg, fd)).norm() < 1e-7);
  }
}

TEST_CASE("fisher scores average to zero under the model") {
  RngStream s{404, 1};
  const int n = 40000;

  ModelSpec gn = generalized_normal(2);
  Vector th(1);
  th << gn_theta_star(2);
  auto xs = gn.sample(th, n, s);
  double mean = 0, m2 = 0;
  for (auto& x : xs) {
    double v = gn.fisher_score(th, 0, x);
    mean += v;
    m2 += v * v;
  }
  mean /= n;
  double se = std::sqrt((m2 / n - mean * mean) / n);
  CHECK(std::abs(mean) < 4 * se);

  ModelSpec gg = generalized_gamma(2);
  Vector th2(1);
  th2 << 1.7;
  auto ys = gg.sample(th2, n, {404, 2});
  mean = 0;
  m2 = 0;
  for (auto& y : ys) {
    double v = gg.fisher_score(th2, 0, y);
    mean += v;
    m2 += v * v;
  }
  mean /= n;
  se = std::sqrt((m2 / n - mean * mean) / n);
  CHECK(std::abs(mean) < 4 * se);

  Vector mu(2);
  mu << 0.3, -0.5;
  Matrix sig(2, 2);
  sig << 1.4, 0.5, 0.5, 0.8;
  ModelSpec mvn = multivariate_normal(mu, sig);
  Vector th3 = mvn_pack(mu, sig);
  auto zs = mvn.sample(th3, n, {404, 3});
  for (int j = 0; j < 5; ++j) {
    mean = 0;
    m2 = 0;
    for (auto& z : zs) {
      double v = mvn.fisher_score(th3, j, z);
      mean += v;
      m2 += v * v;
    }
    mean /= n;
    se = std::sqrt((m2 / n - mean * mean) / n);
    CHECK(std::abs(mean) < 4 * se);
  }
}

TEST_CASE("model constructors validate arguments") {
  CHECK_THROWS_AS(generalized_normal(0), InvalidShape);
  CHECK_THROWS_AS(generalized_gamma(-1), InvalidShape);
  CHECK_THROWS_AS(ppi_model(Vector::Zero(2), 3), InvalidShape);
  CHECK_THROWS_AS(ppi_model(Vector::Zero(1), 1), InvalidShape);
}
