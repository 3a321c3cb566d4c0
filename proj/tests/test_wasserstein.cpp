#include "smom/wasserstein.hpp"

#include <cmath>

#include "doctest.h"
#include "smom/samplers.hpp"
#include "smom/stein.hpp"

using namespace smom;

namespace {

Matrix test_sigma3() {
  Matrix s(3, 3);
  s << 1.6, 0.4, -0.2, 0.4, 1.1, 0.3, -0.2, 0.3, 0.9;
  return s;
}

double mean_of(const Vector& v) { return v.mean(); }

double se_of(const Vector& v) {
  double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / v.size()) /
         std::sqrt(double(v.size()));
}

}  // namespace

TEST_CASE("normal scores: hand values at sigma = I") {
  Vector mu = Vector::Zero(2);
  Matrix sig = Matrix::Identity(2, 2);
  WScore ws = wscore_normal(mu, sig);
  Vector theta = mvn_pack(mu, sig);
  CHECK(ws.d == 5);

  Vector x(2);
  x << 1.0, -0.7;
  // mean entries: x_j - mu_j
  CHECK(ws.eval(theta, 0, x) == doctest::Approx(1.0));
  CHECK(ws.eval(theta, 1, x) == doctest::Approx(-0.7));
  // sigma = I: S_jj = E_jj/2, so Phi_jj = (x_j^2 - 1)/4
  CHECK(ws.eval(theta, 2, x) == doctest::Approx(0.0));
  CHECK(ws.eval(theta, 3, x) == doctest::Approx((0.49 - 1.0) / 4));
  // offdiagonal: S_01 = (E_01 + E_10)/2, Phi = x_0 x_1 / 2
  CHECK(ws.eval(theta, 4, x) == doctest::Approx(-0.35));

  Vector g = ws.grad(theta, 2, x);
  CHECK(g(0) == doctest::Approx(0.5));
  CHECK(g(1) == doctest::Approx(0.0));
  VectorField f = ws.grad_field(theta, 4);
  Vector fv = f(x);
  CHECK(fv(0) == doctest::Approx(-0.35));
  CHECK(fv(1) == doctest::Approx(0.5));
  CHECK(f.jacobian(x)(0, 1) == doctest::Approx(0.5));

  Matrix bad(2, 2);
  bad << 1, 0, 0, -1;
  CHECK_THROWS_AS(wscore_normal(mu, bad), NotSPD);
}

TEST_CASE("generalized normal score: hand values at beta=1") {
  WScore ws = wscore_gn(1);
  Vector theta(1);
  theta << 0.5;  // standard normal
  Vector x(1);
  x << 1.3;
  // Phi = -x^2/2 + 1/2, grad = -x
  CHECK(ws.eval(theta, 0, x) == doctest::Approx(-1.3 * 1.3 / 2 + 0.5));
  CHECK(ws.grad(theta, 0, x)(0) == doctest::Approx(-1.3));
  CHECK(ws.grad_field(theta, 0).jacobian(x)(0, 0) == doctest::Approx(-1.0));
  Vector bad(1);
  bad << -0.2;
  CHECK_THROWS_AS(ws.eval(bad, 0, x), InvalidShape);
}

TEST_CASE("score equation residual vanishes where solutions are exact") {
  Rng rng({77, 0});

  SUBCASE("generalized normal") {
    for (int beta : {1, 2, 3}) {
      ModelSpec m = generalized_normal(beta);
      WScore ws = wscore_gn(beta);
      for (int i = 0; i < 100; ++i) {
        Vector theta(1);
        theta << 0.2 + 2.0 * rng.uniform01();
        Vector x(1);
        x << 3.0 * (rng.uniform01() - 0.5);
        CHECK(std::abs(pde_residual(m, theta, ws, 0, x)) < 1e-10);
      }
    }
  }

  SUBCASE("generalized gamma") {
    ModelSpec m = generalized_gamma(2);
    WScore ws = wscore_gg(2);
    Vector theta(1);
    theta << 1.3;
    for (int i = 0; i < 100; ++i) {
      Vector x(1);
      x << 0.05 + 2.5 * rng.uniform01();
      CHECK(std::abs(pde_residual(m, theta, ws, 0, x)) < 1e-10);
    }
  }

  SUBCASE("multivariate normal") {
    Vector mu = Vector::Zero(3);
    Matrix sig = test_sigma3();
    ModelSpec m = multivariate_normal(mu, sig);
    WScore ws = wscore_normal(mu, sig);
    Vector theta = mvn_pack(mu, sig);
    for (int i = 0; i < 100; ++i) {
      Vector x = rng.normal_vector(3) * 1.5;
      for (int j = 0; j < ws.d; ++j)
        CHECK(std::abs(pde_residual(m, theta, ws, j, x)) < 1e-8);
    }
  }
}

TEST_CASE("scores are centered under the model") {
  const int n = 40000;

  SUBCASE("generalized normal, beta=2") {
    ModelSpec m = generalized_normal(2);
    WScore ws = wscore_gn(2);
    Vector theta(1);
    theta << 0.7;
    auto pts = m.sample(theta, n, {78, 0});
    Vector vals(n);
    for (int i = 0; i < n; ++i) vals(i) = ws.eval(theta, 0, pts[i]);
    CHECK(std::abs(mean_of(vals)) < 4 * se_of(vals));
  }

  SUBCASE("generalized gamma, beta=2") {
    ModelSpec m = generalized_gamma(2);
    WScore ws = wscore_gg(2);
    Vector theta(1);
    theta << 1.3;
    auto pts = m.sample(theta, n, {78, 1});
    Vector vals(n);
    for (int i = 0; i < n; ++i) vals(i) = ws.eval(theta, 0, pts[i]);
    CHECK(std::abs(mean_of(vals)) < 4 * se_of(vals));
  }

  SUBCASE("multivariate normal") {
    Vector mu(3);
    mu << 0.4, -0.2, 1.0;
    Matrix sig = test_sigma3();
    ModelSpec m = multivariate_normal(mu, sig);
    WScore ws = wscore_normal(mu, sig);
    Vector theta = mvn_pack(mu, sig);
    auto pts = m.sample(theta, n, {78, 2});
    for (int j = 0; j < ws.d; ++j) {
      Vector vals(n);
      for (int i = 0; i < n; ++i) vals(i) = ws.eval(theta, j, pts[i]);
      CHECK(std::abs(mean_of(vals)) < 4 * se_of(vals));
    }
  }
}

TEST_CASE("closed-form efficiency ratio") {
  CHECK(are_closed_form(1) == 1.0);
  CHECK(are_closed_form(2) == doctest::Approx(0.6854).epsilon(5e-4 / 0.6854));
  CHECK(are_closed_form(10000) == doctest::Approx(1.0 / 3.0).epsilon(0.03));
  for (int b = 1; b < 50; ++b)
    CHECK(are_closed_form(b + 1) < are_closed_form(b));
  CHECK_THROWS_AS(are_closed_form(0), InvalidShape);
}

TEST_CASE("span test certifies efficiency and flags its failure") {
  SUBCASE("normal family: scores lie in the span") {
    Vector mu(2);
    mu << 0.3, -0.1;
    Matrix sig(2, 2);
    sig << 1.2, 0.4, 0.4, 0.9;
    ModelSpec m = multivariate_normal(mu, sig);
    WScore ws = wscore_normal(mu, sig);
    SpanTest st = efficiency_span_test(m, mvn_pack(mu, sig), ws, 2000, {79, 0});
    CHECK(st.residual < 1e-6);
  }

  SUBCASE("generalized gamma: exact span with lambda = 4 theta") {
    ModelSpec m = generalized_gamma(2);
    WScore ws = wscore_gg(2);
    Vector theta(1);
    theta << 1.3;
    SpanTest st = efficiency_span_test(m, theta, ws, 2000, {79, 1});
    CHECK(st.residual < 1e-8);
    CHECK(st.lambda(0, 0) == doctest::Approx(4 * 1.3).epsilon(1e-8));
  }

  SUBCASE("generalized normal beta=2: score leaves the span") {
    ModelSpec m = generalized_normal(2);
    WScore ws = wscore_gn(2);
    Vector theta(1);
    theta << gn_theta_star(2);
    SpanTest st = efficiency_span_test(m, theta, ws, 20000, {79, 2});
    CHECK(st.residual > 0.1);
    CHECK(st.residual < 0.7);
  }
}

TEST_CASE("cross moments match the information matrix") {
  SUBCASE("generalized gamma") {
    ModelSpec m = generalized_gamma(2);
    WScore ws = wscore_gg(2);
    Vector theta(1);
    theta << 1.3;
    GapEstimate ge = mle_sm_gap(m, theta, ws, 20000, {80, 0});
    const auto& pts = ge.sample->points;
    Vector delta(pts.size());
    VectorField mixed = m.mixed_score_field(theta, 0);
    for (size_t i = 0; i < pts.size(); ++i) {
      double s = m.fisher_score(theta, 0, pts[i]);
      delta(i) = m.weight(pts[i]) * ws.grad(theta, 0, pts[i]).dot(mixed(pts[i])) -
                 s * s;
    }
    CHECK(std::abs(mean_of(delta)) < 4 * se_of(delta));
    // and f_hat itself agrees with the analytic information (b + 1/2)/th^2
    CHECK(ge.f_hat(0, 0) == doctest::Approx(2.5 / (1.3 * 1.3)).epsilon(0.05));
  }

  SUBCASE("multivariate normal") {
    Vector mu(2);
    mu << 0.3, -0.5;
    Matrix sig(2, 2);
    sig << 1.4, 0.5, 0.5, 0.8;
    ModelSpec m = multivariate_normal(mu, sig);
    WScore ws = wscore_normal(mu, sig);
    Vector theta = mvn_pack(mu, sig);
    auto pts = m.sample(theta, 20000, {80, 1});
    for (int j = 0; j < ws.d; ++j)
      for (int k = j; k < ws.d; ++k) {
        Vector delta(pts.size());
        VectorField mixed = m.mixed_score_field(theta, k);
        for (size_t i = 0; i < pts.size(); ++i)
          delta(i) = ws.grad(theta, j, pts[i]).dot(mixed(pts[i])) -
                     m.fisher_score(theta, j, pts[i]) *
                         m.fisher_score(theta, k, pts[i]);
        CHECK(std::abs(mean_of(delta)) < 4 * se_of(delta) + 1e-12);
      }
  }
}

TEST_CASE("efficiency gap vanishes for families with spanning scores") {
  SUBCASE("generalized gamma") {
    ModelSpec m = generalized_gamma(2);
    WScore ws = wscore_gg(2);
    Vector theta(1);
    theta << 1.3;
    GapEstimate ge = mle_sm_gap(m, theta, ws, 20000, {81, 0});
    CHECK(std::abs(ge.inner(0, 0)) < 4 * ge.inner_se(0, 0) + 1e-20);
  }

  SUBCASE("multivariate normal") {
    Vector mu(2);
    mu << 0.2, 0.6;
    Matrix sig(2, 2);
    sig << 1.1, -0.3, -0.3, 0.7;
    ModelSpec m = multivariate_normal(mu, sig);
    WScore ws = wscore_normal(mu, sig);
    GapEstimate ge = mle_sm_gap(m, mvn_pack(mu, sig), ws, 20000, {81, 1});
    for (int j = 0; j < ws.d; ++j)
      for (int k = 0; k < ws.d; ++k)
        CHECK(std::abs(ge.inner(j, k)) < 4 * ge.inner_se(j, k) + 1e-20);
  }
}

TEST_CASE("efficiency gap matches the closed-form ratio at beta=2") {
  ModelSpec m = generalized_normal(2);
  WScore ws = wscore_gn(2);
  Vector theta(1);
  theta << gn_theta_star(2);
  const int n = 100000;
  GapEstimate ge = mle_sm_gap(m, theta, ws, n, {82, 0});
  // score-matching sandwich variance on the same sample
  std::vector<VectorField> mixed{m.mixed_score_field(theta, 0)};
  Matrix am = stein_values(m, theta, mixed, ge.sample->points);
  double u = am.col(0).squaredNorm() / n;
  double avar_sm = u / (ge.g_hat(0, 0) * ge.g_hat(0, 0));
  double ratio = ge.gap(0, 0) / avar_sm;
  CHECK(ratio == doctest::Approx(1.0 - are_closed_form(2)).epsilon(0.03 / 0.3146));
}

TEST_CASE("products with the potential expand pointwise") {
  // A(phi grad phi) = phi A(grad phi) + |grad phi|^2
  ModelSpec m = generalized_normal(2);
  WScore ws = wscore_gn(2);
  Vector theta(1);
  theta << 0.9;
  Rng rng({83, 0});
  auto phi = [&](double x) {
    Vector v(1);
    v << x;
    return ws.eval(theta, 0, v);
  };
  const double c1 = -1.0 / (2 * 2 * 0.9);  // phi' = c1 x
  VectorField prod = VectorField::leaf(
      euclidean(1), "phi-times-grad",
      [phi, c1](const Vector& x) { return Vector(phi(x(0)) * c1 * x); },
      [phi, c1](const Vector& x) {
        double xp = c1 * x(0);
        return Matrix::Constant(1, 1, xp * xp + phi(x(0)) * c1);
      });
  VectorField grad = ws.grad_field(theta, 0);
  for (int i = 0; i < 10; ++i) {
    Vector x(1);
    x << 2.5 * (rng.uniform01() - 0.5);
    double lhs = apply_stein(m, theta, prod, x).value;
    double rhs = phi(x(0)) * apply_stein(m, theta, grad, x).value +
                 (c1 * x(0)) * (c1 * x(0));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("residual direction is orthogonal to the mixed score") {
  // u(x) = -(2b(2b-1) th^(-1+1/b) G(1-1/(2b))/G(1/(2b))) x + 2b x^(2b-1)
  const int beta = 3;
  const double b = beta, th = 0.8;
  ModelSpec m = generalized_normal(beta);
  Vector theta(1);
  theta << th;
  const double c = 2 * b * (2 * b - 1) * std::pow(th, -1 + 1 / b) *
                   std::exp(std::lgamma(1 - 1 / (2 * b)) - std::lgamma(1 / (2 * b)));
  const int n = 50000;
  auto pts = m.sample(theta, n, {84, 0});
  Vector vals(n);
  for (int i = 0; i < n; ++i) {
    double x = pts[i](0);
    double u = -c * x + 2 * b * std::pow(x, 2 * beta - 1);
    vals(i) = -2 * b * std::pow(x, 2 * beta - 1) * u;
  }
  CHECK(std::abs(mean_of(vals)) < 4 * se_of(vals));
}

TEST_CASE("stein products reproduce weighted mixed-score moments") {
  // E[w <f, m_j>] = E[(A f)(A grad Phi_j)] for any nice field f
  SUBCASE("generalized normal beta=2") {
    ModelSpec m = generalized_normal(2);
    WScore ws = wscore_gn(2);
    Vector theta(1);
    theta << 0.8;
    const int n = 20000;
    auto pts = m.sample(theta, n, {85, 0});
    VectorField f = mlp_field(m.domain, {85, 7});
    std::vector<VectorField> pair{f, ws.grad_field(theta, 0)};
    Matrix av = stein_values(m, theta, pair, pts);
    VectorField mixed = m.mixed_score_field(theta, 0);
    Vector delta(n);
    for (int i = 0; i < n; ++i)
      delta(i) = f(pts[i]).dot(mixed(pts[i])) - av(i, 0) * av(i, 1);
    CHECK(std::abs(mean_of(delta)) < 4 * se_of(delta));
  }

  SUBCASE("multivariate normal") {
    Vector mu(2);
    mu << -0.4, 0.2;
    Matrix sig(2, 2);
    sig << 0.9, 0.2, 0.2, 1.3;
    ModelSpec m = multivariate_normal(mu, sig);
    WScore ws = wscore_normal(mu, sig);
    Vector theta = mvn_pack(mu, sig);
    const int n = 20000;
    auto pts = m.sample(theta, n, {85, 1});
    VectorField f = mlp_field(m.domain, {85, 8});
    for (int j = 0; j < ws.d; ++j) {
      std::vector<VectorField> pair{f, ws.grad_field(theta, j)};
      Matrix av = stein_values(m, theta, pair, pts);
      VectorField mixed = m.mixed_score_field(theta, j);
      Vector delta(n);
      for (int i = 0; i < n; ++i)
        delta(i) = f(pts[i]).dot(mixed(pts[i])) - av(i, 0) * av(i, 1);
      CHECK(std::abs(mean_of(delta)) < 4 * se_of(delta));
    }
  }
}
