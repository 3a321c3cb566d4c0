#include "smom/wasserstein.hpp"

#include <cmath>
#include <stdexcept>

namespace smom {

namespace {

void check_theta_positive(const Vector& theta) {
  if (theta.size() != 1 || theta(0) <= 0)
    throw InvalidShape("wscore: scale parameter must be positive");
}

}  // namespace

WScore wscore_normal(const Vector& mu0, const Matrix& sigma0) {
  const int p = static_cast<int>(mu0.size());
  {
    Eigen::LLT<Matrix> llt(sigma0);
    if (llt.info() != Eigen::Success)
      throw NotSPD("wscore_normal: sigma0 not positive definite");
  }
  // free symmetric entries in the packing order of multivariate_normal
  std::vector<std::pair<int, int>> pairs;
  for (int j = 0; j < p; ++j) pairs.emplace_back(j, j);
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) pairs.emplace_back(j, k);

  auto lyapunov = [p, pairs](const Vector& theta, int idx) {
    Vector mu;
    Matrix sigma;
    mvn_unpack(theta, p, mu, sigma);
    auto [a, b] = pairs.at(idx);
    Matrix rhs = Matrix::Zero(p, p);
    rhs(a, b) += 1.0;
    rhs(b, a) += 1.0;
    if (a == b) rhs(a, a) = 1.0;
    return std::make_pair(mu, sylvester_solve(sigma, rhs));
  };

  WScore ws;
  ws.family = "normal";
  ws.d = p + static_cast<int>(pairs.size());
  ws.eval = [p, lyapunov](const Vector& theta, int j, const Vector& x) {
    Vector mu;
    Matrix sigma;
    mvn_unpack(theta, p, mu, sigma);
    if (j < p) return x(j) - mu(j);
    auto [mu2, s] = lyapunov(theta, j - p);
    Vector c = x - mu2;
    return -0.5 * (s * sigma).trace() + 0.5 * c.dot(s * c);
  };
  ws.grad = [p, lyapunov](const Vector& theta, int j, const Vector& x) {
    if (j < p) return Vector(Vector::Unit(p, j));
    auto [mu, s] = lyapunov(theta, j - p);
    return Vector(s * (x - mu));
  };
  ws.grad_field = [p, lyapunov](const Vector& theta, int j) {
    Domain dom = euclidean(p);
    if (j < p) {
      Vector e = Vector::Unit(p, j);
      return VectorField::leaf(
          dom, "wscore-normal-mu" + std::to_string(j),
          [e](const Vector&) { return e; },
          [p](const Vector&) { return Matrix::Zero(p, p); });
    }
    auto [mu, s] = lyapunov(theta, j - p);
    return VectorField::leaf(
        dom, "wscore-normal-sigma" + std::to_string(j - p),
        [s, mu](const Vector& x) { return Vector(s * (x - mu)); },
        [s](const Vector&) { return s; });
  };
  return ws;
}

WScore wscore_gn(int beta) {
  if (beta < 1) throw InvalidShape("wscore_gn: beta must be >= 1");
  const double b = beta;
  WScore ws;
  ws.family = "generalized-normal";
  ws.d = 1;
  auto center = [b](double th) {
    return std::exp(std::lgamma(3 / (2 * b)) - std::lgamma(1 / (2 * b))) /
           (4 * b * std::pow(th, 1 + 1 / b));
  };
  ws.eval = [b, center](const Vector& theta, int, const Vector& x) {
    check_theta_positive(theta);
    return -x(0) * x(0) / (4 * b * theta(0)) + center(theta(0));
  };
  ws.grad = [b](const Vector& theta, int, const Vector& x) {
    check_theta_positive(theta);
    Vector g(1);
    g(0) = -x(0) / (2 * b * theta(0));
    return g;
  };
  ws.grad_field = [b](const Vector& theta, int) {
    check_theta_positive(theta);
    const double c = -1.0 / (2 * b * theta(0));
    return VectorField::leaf(
        euclidean(1), "wscore-gn",
        [c](const Vector& x) { return Vector(c * x); },
        [c](const Vector&) { return Matrix::Constant(1, 1, c); });
  };
  return ws;
}

WScore wscore_gg(int beta) {
  if (beta < 1) throw InvalidShape("wscore_gg: beta must be >= 1");
  const double b = beta;
  WScore ws;
  ws.family = "generalized-gamma";
  ws.d = 1;
  ws.eval = [b](const Vector& theta, int, const Vector& x) {
    check_theta_positive(theta);
    const double th = theta(0);
    return -x(0) * x(0) / (4 * th) + (2 * b + 1) / (8 * th * th);
  };
  ws.grad = [](const Vector& theta, int, const Vector& x) {
    check_theta_positive(theta);
    Vector g(1);
    g(0) = -x(0) / (2 * theta(0));
    return g;
  };
  ws.grad_field = [](const Vector& theta, int) {
    check_theta_positive(theta);
    const double c = -1.0 / (2 * theta(0));
    return VectorField::leaf(
        euclidean(1), "wscore-gg",
        [c](const Vector& x) { return Vector(c * x); },
        [c](const Vector&) { return Matrix::Constant(1, 1, c); });
  };
  return ws;
}

double pde_residual(const ModelSpec& model, const Vector& theta, const WScore& ws,
                    int j, const Vector& x) {
  if (!model.has_fisher())
    throw MissingFisherScore("pde_residual: model lacks a fisher score");
  VectorField f = ws.grad_field(theta, j);
  return apply_stein(model, theta, f, x).value + model.fisher_score(theta, j, x);
}

double are_closed_form(int beta) {
  if (beta < 1) throw InvalidShape("are_closed_form: beta must be >= 1");
  if (beta == 1) return 1.0;  // the gamma factors cancel analytically
  const double b = beta;
  double lg = 2 * std::lgamma(1 - 1 / (2 * b)) - std::lgamma(1 + 1 / (2 * b)) -
              std::lgamma(2 - 3 / (2 * b));
  return (2 * b - 1) / (2 * (3 * b - 2)) * std::exp(lg);
}

SpanTest efficiency_span_test(const ModelSpec& model, const Vector& theta,
                              const WScore& ws, int m, RngStream rng) {
  if (!model.has_fisher())
    throw MissingFisherScore("efficiency_span_test: model lacks a fisher score");
  if (!model.has_sampler())
    throw std::invalid_argument("efficiency_span_test: model has no sampler");
  const int d = model.param_dim;
  if (ws.d != d) throw InvalidShape("efficiency_span_test: score dimension mismatch");
  auto points = model.sample(theta, m, rng);
  Matrix phi(m, d), fisher(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) {
      phi(i, j) = ws.eval(theta, j, points[i]);
      fisher(i, j) = model.fisher_score(theta, j, points[i]);
    }
  // no intercept: both families of scores are centered by definition
  Matrix lambda_t = phi.colPivHouseholderQr().solve(fisher);
  SpanTest out;
  out.lambda = lambda_t.transpose();
  for (int j = 0; j < d; ++j) {
    double num = (fisher.col(j) - phi * lambda_t.col(j)).norm();
    double den = fisher.col(j).norm();
    out.residual = std::max(out.residual, num / (den > 0 ? den : 1.0));
  }
  return out;
}

GapEstimate mle_sm_gap(const ModelSpec& model, const Vector& theta, const WScore& ws,
                       int m, RngStream rng) {
  if (!model.has_sampler())
    throw std::invalid_argument("mle_sm_gap: model has no sampler");
  const int d = model.param_dim;
  if (ws.d != d) throw InvalidShape("mle_sm_gap: score dimension mismatch");

  auto sample = std::make_shared<McSample>();
  sample->points = model.sample(theta, m, rng);
  sample->theta0 = theta;
  sample->stream = rng;

  std::vector<VectorField> mixed, wgrad;
  for (int j = 0; j < d; ++j) {
    mixed.push_back(model.mixed_score_field(theta, j));
    wgrad.push_back(ws.grad_field(theta, j));
  }

  Matrix f = Matrix::Zero(d, d), g = Matrix::Zero(d, d);
  std::vector<Vector> mv(d), pv(d);
  for (const Vector& x : sample->points) {
    const double w = model.weight(x);
    for (int j = 0; j < d; ++j) mv[j] = mixed[j](x);
    for (int j = 0; j < d; ++j) pv[j] = wgrad[j](x);
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) f(j, k) += w * pv[j].dot(mv[k]);
    for (int j = 0; j < d; ++j)
      for (int k = j; k < d; ++k) g(j, k) += w * mv[j].dot(mv[k]);
  }
  f /= m;
  g /= m;
  g = Matrix(g.selfadjointView<Eigen::Upper>());

  // coef = G F^-1 (d x d)
  Eigen::FullPivLU<Matrix> lu(f.transpose());
  if (!lu.isInvertible())
    throw NotSPD("mle_sm_gap: cross moment matrix is singular");
  Matrix coef = lu.solve(g).transpose();

  std::vector<VectorField> u;
  std::vector<VectorField> parts;
  for (int j = 0; j < d; ++j) {
    parts.clear();
    Vector c(d + 1);
    for (int k = 0; k < d; ++k) {
      parts.push_back(wgrad[k]);
      c(k) = coef(j, k);
    }
    parts.push_back(mixed[j]);
    c(d) = -1.0;
    u.push_back(combine(parts, c));
  }
  Matrix au = stein_values(model, theta, u, sample->points);

  Matrix inner = Matrix(0.5 * ((au.transpose() * au) / m +
                               (au.transpose() * au).transpose() / m));
  Matrix se(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      double m2 = (au.col(j).array() * au.col(k).array()).square().sum() / m;
      se(j, k) = std::sqrt(std::max(0.0, m2 - inner(j, k) * inner(j, k)) / m);
    }

  Matrix half = solve_spd(g, inner);
  Matrix gap = solve_spd(g, Matrix(half.transpose())).transpose();

  GapEstimate out;
  out.gap = std::move(gap);
  out.inner = std::move(inner);
  out.inner_se = std::move(se);
  out.f_hat = std::move(f);
  out.g_hat = std::move(g);
  out.sample = std::move(sample);
  return out;
}

}  // namespace smom
