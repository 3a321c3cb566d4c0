#include "smom/domains.hpp"

#include <cmath>

namespace smom {

namespace {

using MatMap = Eigen::Map<const Matrix>;

Matrix as_matrix(const Domain& d, const Vector& x) {
  return MatMap(x.data(), d.p, d.k);
}

Vector flat(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

void check_point(const Domain& d, const Vector& x) {
  if (x.size() != d.ambient_dim()) throw InvalidShape("point has wrong ambient dimension");
  if (!d.contains(x)) throw DomainViolation("point not on domain");
}

}  // namespace

int Domain::intrinsic_dim() const {
  switch (kind) {
    case DomainKind::Euclidean: return p;
    case DomainKind::SphereOrthant: return p - 1;
    case DomainKind::Stiefel: return p * k - k * (k + 1) / 2;
  }
  return 0;
}

bool Domain::contains(const Vector& x, double tol) const {
  if (x.size() != ambient_dim()) return false;
  if (!x.allFinite()) return false;
  switch (kind) {
    case DomainKind::Euclidean:
      return true;
    case DomainKind::SphereOrthant:
      if (std::abs(x.norm() - 1.0) > tol) return false;
      return (x.array() >= -tol).all();
    case DomainKind::Stiefel: {
      Matrix m = as_matrix(*this, x);
      return (m.transpose() * m - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() <= tol;
    }
  }
  return false;
}

Domain euclidean(int p) {
  if (p < 1) throw InvalidShape("euclidean: p must be >= 1");
  return {DomainKind::Euclidean, p, 0};
}

Domain sphere_orthant(int p) {
  if (p < 2) throw InvalidShape("sphere_orthant: p must be >= 2");
  return {DomainKind::SphereOrthant, p, 0};
}

Domain stiefel(int p, int k) {
  if (k < 1 || k >= p) throw InvalidShape("stiefel: need 1 <= k < p");
  return {DomainKind::Stiefel, p, k};
}

Vector project_tangent(const Domain& d, const Vector& x, const Vector& z) {
  if (z.size() != x.size() || x.size() != d.ambient_dim())
    throw InvalidShape("project_tangent: dimension mismatch");
  switch (d.kind) {
    case DomainKind::Euclidean:
      return z;
    case DomainKind::SphereOrthant:
      return z - x.dot(z) * x;
    case DomainKind::Stiefel: {
      Matrix xm = as_matrix(d, x);
      Matrix zm = as_matrix(d, z);
      Matrix sym = 0.5 * (xm.transpose() * zm + zm.transpose() * xm);
      return flat(zm - xm * sym);
    }
  }
  return z;
}

Vector project_tangent_point_derivative(const Domain& d, const Vector& x,
                                        const Vector& v, const Vector& z) {
  switch (d.kind) {
    case DomainKind::Euclidean:
      return Vector::Zero(z.size());
    case DomainKind::SphereOrthant:
      return -v.dot(z) * x - x.dot(z) * v;
    case DomainKind::Stiefel: {
      Matrix xm = as_matrix(d, x);
      Matrix vm = as_matrix(d, v);
      Matrix zm = as_matrix(d, z);
      Matrix sym_xz = 0.5 * (xm.transpose() * zm + zm.transpose() * xm);
      Matrix sym_vz = 0.5 * (vm.transpose() * zm + zm.transpose() * vm);
      return flat(Matrix(-vm * sym_xz - xm * sym_vz));
    }
  }
  return Vector::Zero(z.size());
}

std::vector<Vector> tangent_basis(const Domain& d, const Vector& x) {
  check_point(d, x);
  const int n = d.ambient_dim();
  const int m = d.intrinsic_dim();
  std::vector<Vector> basis;
  basis.reserve(m);
  for (int i = 0; i < n && static_cast<int>(basis.size()) < m; ++i) {
    Vector cand = project_tangent(d, x, Vector::Unit(n, i));
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& b : basis) cand -= b.dot(cand) * b;
    const double nrm = cand.norm();
    if (nrm < 1e-8) continue;
    basis.push_back(cand / nrm);
  }
  if (static_cast<int>(basis.size()) != m)
    throw DegenerateBasis("tangent_basis: projected canonical vectors do not span");
  return basis;
}

Vector retract(const Domain& d, const Vector& x, const Vector& v, double t) {
  check_point(d, x);
  if (v.size() != x.size()) throw InvalidShape("retract: dimension mismatch");
  switch (d.kind) {
    case DomainKind::Euclidean:
      return x + t * v;
    case DomainKind::SphereOrthant: {
      Vector y = x + t * v;
      const double nrm = y.norm();
      if (!(nrm > 0.0)) throw RetractionFailure("retract: zero norm");
      return y / nrm;
    }
    case DomainKind::Stiefel: {
      Matrix y = as_matrix(d, x) + t * as_matrix(d, v);
      Eigen::JacobiSVD<Matrix> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
      Matrix q = svd.matrixU() * svd.matrixV().transpose();
      Vector out = flat(q);
      if (!d.contains(out))
        throw RetractionFailure("retract: polar factor left the manifold");
      return out;
    }
  }
  return x;
}

}  // namespace smom
