#include "smom/samplers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "smom/errors.hpp"

namespace smom {

namespace {

constexpr double kBoundMargin = 1e-6;
constexpr int kMaxTriesPerSample = 100000;

Vector flatten(const Matrix& m) {
  return Vector(Eigen::Map<const Vector>(m.data(), m.size()));
}

}  // namespace

std::vector<Vector> sample_gn(int beta, double theta, int n, RngStream stream) {
  if (beta < 1 || theta <= 0) throw std::invalid_argument("sample_gn: bad parameters");
  Rng rng(stream);
  const double shape = 1.0 / (2.0 * beta);
  std::vector<Vector> out(n, Vector(1));
  for (int i = 0; i < n; ++i) {
    double u = rng.gamma(shape, theta);
    double x = std::pow(u, shape);
    if (rng.uniform01() < 0.5) x = -x;
    out[i](0) = x;
  }
  return out;
}

std::vector<Vector> sample_gg(int beta, double theta, int n, RngStream stream) {
  if (beta < 1 || theta <= 0) throw std::invalid_argument("sample_gg: bad parameters");
  Rng rng(stream);
  std::vector<Vector> out(n, Vector(1));
  for (int i = 0; i < n; ++i) {
    double u = rng.gamma(beta + 0.5, theta);
    double x = std::sqrt(u);
    if (rng.uniform01() < 0.5) x = -x;
    out[i](0) = x;
  }
  return out;
}

std::vector<Vector> sample_mvn(const Vector& mu, const Matrix& sigma, int n,
                               RngStream stream) {
  const int p = static_cast<int>(mu.size());
  if (sigma.rows() != p || sigma.cols() != p)
    throw InvalidShape("sample_mvn: sigma dimension mismatch");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw NotSPD("sample_mvn: sigma not positive definite");
  Matrix l = llt.matrixL();
  Rng rng(stream);
  std::vector<Vector> out(n);
  for (int i = 0; i < n; ++i) out[i] = mu + l * rng.normal_vector(p);
  return out;
}

Vector sample_uniform_sphere_orthant(int p, Rng& rng) {
  for (;;) {
    Vector g = rng.normal_vector(p).cwiseAbs();
    double nrm = g.norm();
    if (nrm > 0) return g / nrm;
  }
}

Matrix sample_uniform_stiefel(int p, int k, Rng& rng) {
  Matrix g(p, k);
  for (int j = 0; j < k; ++j) g.col(j) = rng.normal_vector(p);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(p, k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

double ppi_rejection_bound(const Matrix& a, const Vector& mu) {
  const int p = static_cast<int>(mu.size());
  if (a.rows() != p || a.cols() != p)
    throw InvalidShape("ppi_rejection_bound: dimension mismatch");
  // maximize y'Ay + mu'y over the probability simplex (y = x squared). The
  // max sits at a stationary point of some face, enumerated exhaustively.
  // Stationary points are invariant under scaling the objective, so the KKT
  // systems are solved at unit scale for accuracy.
  auto value = [&](const Vector& y) { return y.dot(a * y) + mu.dot(y); };
  const double scale =
      std::max(1.0, std::max(a.lpNorm<Eigen::Infinity>(), mu.lpNorm<Eigen::Infinity>()));
  double best = -std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << p); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < p; ++j)
      if (mask & (1u << j)) idx.push_back(j);
    const int m = static_cast<int>(idx.size());
    Matrix kkt = Matrix::Zero(m + 1, m + 1);
    Vector rhs(m + 1);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) kkt(r, c) = 2.0 * a(idx[r], idx[c]) / scale;
      kkt(r, m) = -1.0;
      kkt(m, r) = 1.0;
      rhs(r) = -mu(idx[r]) / scale;
    }
    rhs(m) = 1.0;
    Eigen::FullPivLU<Matrix> lu(kkt);
    Vector sol;
    if (lu.isInvertible()) {
      sol = lu.solve(rhs);
    } else {
      sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      if ((kkt * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-9) continue;
    }
    bool feasible = true;
    Vector y = Vector::Zero(p);
    for (int r = 0; r < m; ++r) {
      if (sol(r) < -1e-9) feasible = false;
      y(idx[r]) = std::max(sol(r), 0.0);
    }
    if (feasible) best = std::max(best, value(y));
  }
  // margin absorbs solver rounding, which scales with the tilt magnitude;
  // any positive slack keeps the rejection ratio exact
  return best + kBoundMargin +
         1e-9 * (a.lpNorm<Eigen::Infinity>() + mu.lpNorm<Eigen::Infinity>());
}

double bingham_rejection_bound(const Matrix& a, int k) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success)
    throw NoConvergence("bingham_rejection_bound: eigensolver failed");
  const int p = static_cast<int>(a.rows());
  return es.eigenvalues().tail(std::min(k, p)).sum() + kBoundMargin +
         1e-9 * a.lpNorm<Eigen::Infinity>();
}

std::vector<Vector> sample_ppi_tilt(const Matrix& a, const Vector& mu, int n,
                                    RngStream stream) {
  const int p = static_cast<int>(mu.size());
  const double bound = ppi_rejection_bound(a, mu);
  Rng rng(stream);
  std::vector<Vector> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    for (int tries = 0;; ++tries) {
      if (tries >= kMaxTriesPerSample)
        throw NoConvergence("sample_ppi_tilt: acceptance budget exhausted");
      Vector x = sample_uniform_sphere_orthant(p, rng);
      Vector y = x.cwiseProduct(x);
      double logr = y.dot(a * y) + mu.dot(y) - bound;
      if (logr > 0) throw BoundViolation("sample_ppi_tilt: bound violated");
      if (std::log(rng.uniform01() + 1e-300) <= logr) {
        out.push_back(std::move(x));
        break;
      }
    }
  }
  return out;
}

std::vector<Vector> sample_bingham_tilt(const Matrix& a, int k, int n,
                                        RngStream stream) {
  const int p = static_cast<int>(a.rows());
  const double bound = bingham_rejection_bound(a, k);
  Rng rng(stream);
  std::vector<Vector> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    for (int tries = 0;; ++tries) {
      if (tries >= kMaxTriesPerSample)
        throw NoConvergence("sample_bingham_tilt: acceptance budget exhausted");
      Matrix x = sample_uniform_stiefel(p, k, rng);
      double logr = (x.transpose() * a * x).trace() - bound;
      if (logr > 0) throw BoundViolation("sample_bingham_tilt: bound violated");
      if (std::log(rng.uniform01() + 1e-300) <= logr) {
        out.push_back(flatten(x));
        break;
      }
    }
  }
  return out;
}

std::vector<Vector> sample_ppi(const ModelSpec& model, const Vector& theta, int n,
                               RngStream stream) {
  if (!model.has_sampler())
    throw std::invalid_argument("sample_ppi: model has no sampler");
  return model.sample(theta, n, stream);
}

std::vector<Vector> sample_bingham(const ModelSpec& model, const Vector& theta,
                                   int n, RngStream stream) {
  if (!model.has_sampler())
    throw std::invalid_argument("sample_bingham: model has no sampler");
  return model.sample(theta, n, stream);
}

}  // namespace smom
