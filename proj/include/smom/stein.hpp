#pragma once

#include <vector>

#include "smom/models.hpp"

namespace smom {

// One Stein-operator evaluation, split into its two summands.
struct SteinEval {
  double value = 0;
  double divergence_part = 0;  // div of the weighted field
  double score_part = 0;       // w <f, (projected) grad_x log q~>
};

// Central-difference step along retraction curves.
inline constexpr double kSteinFdStep = 1e-5;

// Divergence of a tangent field on a manifold domain: sum over an orthonormal
// tangent basis {e_a} of <(f(R_x(h e_a)) - f(R_x(-h e_a))) / 2h, e_a>.
// Euclidean domains use the field's analytic divergence.
double manifold_divergence(const Domain& domain, const VectorField& f,
                           const Vector& x);

// Stein operator of the model at theta applied to f:
//   div(w f)(x) + w(x) <f(x), grad_x log q~(theta, x)>
// with div the manifold divergence (finite differences on the weighted field)
// on manifold domains and the analytic w div f + <grad w, f> on Euclidean
// ones. The score term uses the tangent-projected gradient on manifolds;
// since f is tangent, the ambient inner product already realizes it.
SteinEval apply_stein(const ModelSpec& model, const Vector& theta,
                      const VectorField& f, const Vector& x);

// values(i, j) = apply_stein(model, theta, fields[j], points[i]).value.
// Per-point geometry (weights, scores, tangent bases, retraction points) is
// computed once and primitive sub-fields shared across combinations are
// evaluated once, so bulk moment estimation stays linear in the number of
// distinct primitives.
Matrix stein_values(const ModelSpec& model, const Vector& theta,
                    const std::vector<VectorField>& fields,
                    const std::vector<Vector>& points);

}  // namespace smom
