#pragma once

#include <vector>

#include "smom/numerics.hpp"

namespace smom {

enum class DomainKind { Euclidean, SphereOrthant, Stiefel };

// Supported sample spaces. Points are ambient vectors; a Stiefel point is the
// p x k matrix flattened column-major.
struct Domain {
  DomainKind kind = DomainKind::Euclidean;
  int p = 1;  // euclidean/sphere dimension, or stiefel rows
  int k = 0;  // stiefel columns

  int ambient_dim() const { return kind == DomainKind::Stiefel ? p * k : p; }
  int intrinsic_dim() const;
  bool is_manifold() const { return kind != DomainKind::Euclidean; }
  bool contains(const Vector& x, double tol = 1e-10) const;
  bool operator==(const Domain&) const = default;
};

Domain euclidean(int p);
Domain sphere_orthant(int p);
Domain stiefel(int p, int k);

// Orthogonal projection of an ambient vector z onto the tangent space at x.
Vector project_tangent(const Domain& d, const Vector& x, const Vector& z);

// Derivative of the projection in its base point: d/dt P_{x+tv}(z) at t=0,
// for fixed ambient z. Needed to differentiate fields of the form P_x f(x).
Vector project_tangent_point_derivative(const Domain& d, const Vector& x,
                                        const Vector& v, const Vector& z);

// Orthonormal tangent basis built by Gram-Schmidt over projected canonical
// basis vectors in ascending index order (deterministic).
std::vector<Vector> tangent_basis(const Domain& d, const Vector& x);

// Second-order retraction: x + t v to O(t^2). Sphere: normalization.
// Stiefel: polar factor. Euclidean: the straight line itself.
Vector retract(const Domain& d, const Vector& x, const Vector& v, double t);

}  // namespace smom
