#include "smom/models.hpp"

#include <cmath>

#include "smom/samplers.hpp"

namespace smom {

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

ModelSpec make_expfam(Domain domain, std::string name, ExpFamParts parts,
                      std::function<double(const Vector&)> weight = nullptr,
                      std::function<Vector(const Vector&)> weight_grad = nullptr) {
  auto ef = std::make_shared<const ExpFamParts>(std::move(parts));
  const int n = domain.ambient_dim();
  ModelSpec m;
  m.domain = domain;
  m.param_dim = ef->d;
  m.name = std::move(name);
  m.expfam = ef;
  m.log_unnorm = [ef](const Vector& theta, const Vector& x) {
    double s = ef->log_base ? ef->log_base(x) : 0.0;
    for (int j = 0; j < ef->d; ++j) s += theta(j) * ef->t(x, j);
    return s;
  };
  m.grad_x_log = [ef, n](const Vector& theta, const Vector& x) {
    Vector g = ef->grad_base ? ef->grad_base(x) : Vector::Zero(n);
    for (int j = 0; j < ef->d; ++j) g += theta(j) * ef->grad_t(x, j);
    return g;
  };
  m.mixed_score_field = [ef, domain, nm = m.name](const Vector&, int j) {
    if (j < 0 || j >= ef->d) throw InvalidShape("mixed_score_field: bad index");
    auto raw = [ef, j](const Vector& x) { return ef->grad_t(x, j); };
    VectorField::JacobianFn jac;
    if (ef->hess_t) jac = [ef, j](const Vector& x) { return ef->hess_t(x, j); };
    return projected_field(domain, nm + "-score-" + std::to_string(j), raw, jac);
  };
  if (weight) {
    m.weight = std::move(weight);
    m.weight_grad = std::move(weight_grad);
  } else {
    m.weight = [](const Vector&) { return 1.0; };
    m.weight_grad = [n](const Vector&) { return Vector::Zero(n); };
  }
  return m;
}

// free symmetric entries of a p x p block, diagonal first then off-diagonal
// lexicographic; rows/cols limited to the leading `range` block
std::vector<std::pair<int, int>> sym_pairs(int range) {
  std::vector<std::pair<int, int>> pairs;
  for (int j = 0; j < range; ++j) pairs.emplace_back(j, j);
  for (int j = 0; j < range; ++j)
    for (int k = j + 1; k < range; ++k) pairs.emplace_back(j, k);
  return pairs;
}

}  // namespace

double gn_theta_star(int beta) {
  const double b = beta;
  return std::exp(b * (std::lgamma(3.0 / (2 * b)) - std::lgamma(1.0 / (2 * b))));
}

ModelSpec generalized_normal(int beta) {
  if (beta < 1) throw InvalidShape("generalized_normal: beta must be >= 1");
  ExpFamParts ef;
  ef.d = 1;
  ef.t = [beta](const Vector& x, int) { return -ipow(x(0), 2 * beta); };
  ef.grad_t = [beta](const Vector& x, int) {
    Vector g(1);
    g(0) = -2.0 * beta * ipow(x(0), 2 * beta - 1);
    return g;
  };
  ef.hess_t = [beta](const Vector& x, int) {
    Matrix h(1, 1);
    h(0, 0) = -2.0 * beta * (2 * beta - 1) * ipow(x(0), 2 * beta - 2);
    return h;
  };
  ModelSpec m = make_expfam(euclidean(1), "generalized_normal", std::move(ef));
  m.fisher_score = [beta](const Vector& theta, int, const Vector& x) {
    return 1.0 / (2.0 * beta * theta(0)) - ipow(x(0), 2 * beta);
  };
  m.sample = [beta](const Vector& theta, int n, RngStream s) {
    return sample_gn(beta, theta(0), n, s);
  };
  return m;
}

ModelSpec generalized_gamma(int beta) {
  if (beta < 1) throw InvalidShape("generalized_gamma: beta must be >= 1");
  ExpFamParts ef;
  ef.d = 1;
  ef.t = [](const Vector& x, int) { return -x(0) * x(0); };
  ef.grad_t = [](const Vector& x, int) {
    Vector g(1);
    g(0) = -2.0 * x(0);
    return g;
  };
  ef.hess_t = [](const Vector&, int) {
    Matrix h(1, 1);
    h(0, 0) = -2.0;
    return h;
  };
  ef.log_base = [beta](const Vector& x) { return 2.0 * beta * std::log(std::abs(x(0))); };
  ef.grad_base = [beta](const Vector& x) {
    Vector g(1);
    g(0) = 2.0 * beta / x(0);
    return g;
  };
  ModelSpec m = make_expfam(euclidean(1), "generalized_gamma", std::move(ef));
  m.fisher_score = [beta](const Vector& theta, int, const Vector& x) {
    return -x(0) * x(0) + (2.0 * beta + 1.0) / (2.0 * theta(0));
  };
  m.sample = [beta](const Vector& theta, int n, RngStream s) {
    return sample_gg(beta, theta(0), n, s);
  };
  return m;
}

Vector mvn_pack(const Vector& mu, const Matrix& sigma) {
  const int p = static_cast<int>(mu.size());
  auto pairs = sym_pairs(p);
  Vector theta(p + static_cast<int>(pairs.size()));
  theta.head(p) = mu;
  for (size_t i = 0; i < pairs.size(); ++i)
    theta(p + static_cast<int>(i)) = sigma(pairs[i].first, pairs[i].second);
  return theta;
}

void mvn_unpack(const Vector& theta, int p, Vector& mu, Matrix& sigma) {
  auto pairs = sym_pairs(p);
  if (theta.size() != p + static_cast<int>(pairs.size()))
    throw InvalidShape("mvn_unpack: bad parameter length");
  mu = theta.head(p);
  sigma.resize(p, p);
  for (size_t i = 0; i < pairs.size(); ++i) {
    auto [j, k] = pairs[i];
    sigma(j, k) = sigma(k, j) = theta(p + static_cast<int>(i));
  }
}

ModelSpec multivariate_normal(const Vector& mu0, const Matrix& sigma0) {
  const int p = static_cast<int>(mu0.size());
  if (sigma0.rows() != p || sigma0.cols() != p)
    throw InvalidShape("multivariate_normal: sigma dimension mismatch");
  {
    Eigen::LLT<Matrix> llt(sigma0);
    if (llt.info() != Eigen::Success)
      throw NotSPD("multivariate_normal: sigma0 not positive definite");
  }
  const auto pairs = sym_pairs(p);
  const int d = p + static_cast<int>(pairs.size());

  auto unpack = [p](const Vector& theta) {
    Vector mu;
    Matrix sigma;
    mvn_unpack(theta, p, mu, sigma);
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success)
      throw NotSPD("multivariate_normal: sigma not positive definite");
    Matrix inv = llt.solve(Matrix::Identity(p, p));
    return std::make_pair(mu, inv);
  };
  auto sylvester_rhs = [](int j, int k, int p_) {
    Matrix rhs = Matrix::Zero(p_, p_);
    rhs(j, k) += 1.0;
    rhs(k, j) += 1.0;
    if (j == k) rhs(j, j) = 1.0;
    return rhs;
  };

  ModelSpec m;
  m.domain = euclidean(p);
  m.param_dim = d;
  m.name = "multivariate_normal";
  m.log_unnorm = [unpack](const Vector& theta, const Vector& x) {
    auto [mu, inv] = unpack(theta);
    Vector c = x - mu;
    return -0.5 * c.dot(inv * c);
  };
  m.grad_x_log = [unpack](const Vector& theta, const Vector& x) {
    auto [mu, inv] = unpack(theta);
    return Vector(-inv * (x - mu));
  };
  m.mixed_score_field = [p, pairs, unpack, sylvester_rhs](const Vector& theta, int j) {
    auto [mu, inv] = unpack(theta);
    Domain dom = euclidean(p);
    if (j < p) {
      Vector col = inv.col(j);
      return VectorField::leaf(
          dom, "normal-score-mu" + std::to_string(j),
          [col](const Vector&) { return col; },
          [p](const Vector&) { return Matrix::Zero(p, p); });
    }
    auto [a, b] = pairs.at(j - p);
    Matrix sigma;
    Vector mu2;
    mvn_unpack(theta, p, mu2, sigma);
    Matrix s = sylvester_solve(sigma, sylvester_rhs(a, b, p));
    Matrix bmat = s * inv + inv * s;
    return VectorField::leaf(
        dom, "normal-score-sigma" + std::to_string(a) + std::to_string(b),
        [bmat, mu](const Vector& x) { return Vector(bmat * (x - mu)); },
        [bmat](const Vector&) { return bmat; });
  };
  m.fisher_score = [p, pairs, unpack, sylvester_rhs](const Vector& theta, int j,
                                                     const Vector& x) {
    auto [mu, inv] = unpack(theta);
    if (j < p) return (inv * (x - mu))(j);
    auto [a, b] = pairs.at(j - p);
    Matrix sigma;
    Vector mu2;
    mvn_unpack(theta, p, mu2, sigma);
    Matrix s = sylvester_solve(sigma, sylvester_rhs(a, b, p));
    Vector c = x - mu;
    return -s.trace() + 0.5 * c.dot((s * inv + inv * s) * c);
  };
  m.weight = [](const Vector&) { return 1.0; };
  m.weight_grad = [p](const Vector&) { return Vector::Zero(p); };
  m.sample = [p](const Vector& theta, int n, RngStream s) {
    Vector mu;
    Matrix sigma;
    mvn_unpack(theta, p, mu, sigma);
    return sample_mvn(mu, sigma, n, s);
  };
  return m;
}

Vector ppi_pack(const Matrix& a, const Vector& mu) {
  const int p = static_cast<int>(mu.size());
  const auto pairs = sym_pairs(p - 1);
  Vector theta(static_cast<int>(pairs.size()) + p - 1);
  for (size_t i = 0; i < pairs.size(); ++i)
    theta(static_cast<int>(i)) = a(pairs[i].first, pairs[i].second);
  for (int j = 0; j < p - 1; ++j) theta(static_cast<int>(pairs.size()) + j) = mu(j);
  return theta;
}

void ppi_unpack(const Vector& theta, int p, Matrix& a, Vector& mu) {
  const auto pairs = sym_pairs(p - 1);
  if (theta.size() != static_cast<int>(pairs.size()) + p - 1)
    throw InvalidShape("ppi_unpack: bad parameter length");
  a = Matrix::Zero(p, p);
  mu = Vector::Zero(p);
  for (size_t i = 0; i < pairs.size(); ++i) {
    auto [j, k] = pairs[i];
    a(j, k) = a(k, j) = theta(static_cast<int>(i));
  }
  for (int j = 0; j < p - 1; ++j) mu(j) = theta(static_cast<int>(pairs.size()) + j);
}

ModelSpec ppi_model(const Vector& beta, int p) {
  if (p < 2) throw InvalidShape("ppi_model: p must be >= 2");
  if (beta.size() != p) throw InvalidShape("ppi_model: beta must have length p");
  const auto pairs = sym_pairs(p - 1);
  const int na = static_cast<int>(pairs.size());
  const int d = na + p - 1;
  const bool zero_base = (beta.array() == -0.5).all();

  ExpFamParts ef;
  ef.d = d;
  ef.t = [pairs, na, p](const Vector& x, int j) {
    if (j < na) {
      auto [a, b] = pairs[j];
      if (a == b) return ipow(x(a), 4);
      return 2.0 * x(a) * x(a) * x(b) * x(b);
    }
    int mj = j - na;
    (void)p;
    return x(mj) * x(mj);
  };
  ef.grad_t = [pairs, na, p](const Vector& x, int j) {
    Vector g = Vector::Zero(p);
    if (j < na) {
      auto [a, b] = pairs[j];
      if (a == b) {
        g(a) = 4.0 * ipow(x(a), 3);
      } else {
        g(a) = 4.0 * x(a) * x(b) * x(b);
        g(b) = 4.0 * x(a) * x(a) * x(b);
      }
    } else {
      int mj = j - na;
      g(mj) = 2.0 * x(mj);
    }
    return g;
  };
  ef.hess_t = [pairs, na, p](const Vector& x, int j) {
    Matrix h = Matrix::Zero(p, p);
    if (j < na) {
      auto [a, b] = pairs[j];
      if (a == b) {
        h(a, a) = 12.0 * x(a) * x(a);
      } else {
        h(a, a) = 4.0 * x(b) * x(b);
        h(b, b) = 4.0 * x(a) * x(a);
        h(a, b) = h(b, a) = 8.0 * x(a) * x(b);
      }
    } else {
      int mj = j - na;
      h(mj, mj) = 2.0;
    }
    return h;
  };
  if (!zero_base) {
    ef.log_base = [beta, p](const Vector& x) {
      double s = 0;
      for (int i = 0; i < p; ++i) s += (1.0 + 2.0 * beta(i)) * std::log(x(i));
      return s;
    };
    ef.grad_base = [beta, p](const Vector& x) {
      Vector g(p);
      for (int i = 0; i < p; ++i) g(i) = (1.0 + 2.0 * beta(i)) / x(i);
      return g;
    };
  }
  auto weight = [p](const Vector& x) {
    double w = 1.0;
    for (int i = 0; i < p; ++i) w *= x(i);
    return w;
  };
  auto weight_grad = [p](const Vector& x) {
    // partial products, no division (robust near the boundary)
    Vector pre(p + 1), suf(p + 1);
    pre(0) = 1.0;
    for (int i = 0; i < p; ++i) pre(i + 1) = pre(i) * x(i);
    suf(p) = 1.0;
    for (int i = p - 1; i >= 0; --i) suf(i) = suf(i + 1) * x(i);
    Vector g(p);
    for (int i = 0; i < p; ++i) g(i) = pre(i) * suf(i + 1);
    return g;
  };
  ModelSpec m = make_expfam(sphere_orthant(p), "ppi", std::move(ef), weight, weight_grad);
  if (zero_base) {
    m.sample = [p](const Vector& theta, int n, RngStream s) {
      Matrix a;
      Vector mu;
      ppi_unpack(theta, p, a, mu);
      return sample_ppi_tilt(a, mu, n, s);
    };
  }
  return m;
}

Vector bingham_pack(const Matrix& a) {
  const int p = static_cast<int>(a.rows());
  Vector theta(p - 1 + p * (p - 1) / 2);
  int idx = 0;
  for (int j = 0; j < p - 1; ++j) theta(idx++) = a(j, j);
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) theta(idx++) = a(j, k);
  return theta;
}

Matrix bingham_unpack(const Vector& theta, int p) {
  if (theta.size() != p - 1 + p * (p - 1) / 2)
    throw InvalidShape("bingham_unpack: bad parameter length");
  Matrix a = Matrix::Zero(p, p);
  int idx = 0;
  for (int j = 0; j < p - 1; ++j) a(j, j) = theta(idx++);
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) a(j, k) = a(k, j) = theta(idx++);
  return a;
}

ModelSpec matrix_bingham(int p, int k) {
  Domain dom = stiefel(p, k);
  // parameters: A_jj for j < p-1, then A_jk (j < k) lexicographic
  std::vector<std::pair<int, int>> entries;
  for (int j = 0; j < p - 1; ++j) entries.emplace_back(j, j);
  for (int j = 0; j < p; ++j)
    for (int kk = j + 1; kk < p; ++kk) entries.emplace_back(j, kk);
  const int d = static_cast<int>(entries.size());

  ExpFamParts ef;
  ef.d = d;
  ef.t = [entries, p, k](const Vector& x, int j) {
    Eigen::Map<const Matrix> xm(x.data(), p, k);
    auto [a, b] = entries[j];
    double v = xm.row(a).dot(xm.row(b));
    return a == b ? v : 2.0 * v;
  };
  ef.grad_t = [entries, p, k](const Vector& x, int j) {
    Eigen::Map<const Matrix> xm(x.data(), p, k);
    Matrix g = Matrix::Zero(p, k);
    auto [a, b] = entries[j];
    if (a == b) {
      g.row(a) = 2.0 * xm.row(a);
    } else {
      g.row(a) = 2.0 * xm.row(b);
      g.row(b) = 2.0 * xm.row(a);
    }
    return Vector(Eigen::Map<const Vector>(g.data(), g.size()));
  };
  ef.hess_t = [entries, p, k](const Vector&, int j) {
    const int n = p * k;
    Matrix h = Matrix::Zero(n, n);
    auto [a, b] = entries[j];
    for (int col = 0; col < k; ++col) {
      int ia = a + p * col, ib = b + p * col;
      if (a == b) {
        h(ia, ia) = 2.0;
      } else {
        h(ia, ib) = h(ib, ia) = 2.0;
      }
    }
    return h;
  };
  ModelSpec m = make_expfam(dom, "bingham", std::move(ef));
  m.sample = [p, k](const Vector& theta, int n, RngStream s) {
    Matrix a = bingham_unpack(theta, p);
    (void)n;
    return sample_bingham_tilt(a, k, n, s);
  };
  return m;
}

}  // namespace smom
