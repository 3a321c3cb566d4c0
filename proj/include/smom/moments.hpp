#pragma once

#include <memory>
#include <vector>

#include "smom/stein.hpp"

namespace smom {

// One Monte Carlo sample drawn from the model at theta0.
struct McSample {
  std::vector<Vector> points;
  Vector theta0;
  RngStream stream;
};

// Inner-product moment matrices, all estimated on one shared sample.
// With m_j the mixed-score fields, v_a the orthogonalized fields and A the
// Stein operator at theta0:
//   f(a, j) = mean w <raw_a, m_j>      (K x d, pre-orthogonalization)
//   g(j, k) = mean w <m_j, m_k>        (d x d)
//   s(j, a) = mean (A m_j)(A v_a)      (d x K)
//   t(a, b) = mean (A v_a)(A v_b)      (K x K)
//   u(j, k) = mean (A m_j)(A m_k)      (d x d)
struct MomentMatrices {
  Matrix f, g, s, t, u;
  std::shared_ptr<const McSample> sample;
};

// Moment matrices plus the fields they refer to. v holds the orthogonalized
// fields (possibly fewer than requested, see the degenerate-direction rule),
// mixed the model's mixed-score fields at theta0; improved_fields and later
// Stein evaluations reuse these exact instances so shared primitives are
// recognized by identity.
struct MomentEstimate {
  MomentMatrices mm;
  std::vector<VectorField> v;
  std::vector<VectorField> mixed;
};

// Draws M points from the model at theta0, estimates F and G, forms the
// orthogonalized fields v_a = raw_a - sum_j (F G^-1)_{aj} m_j, and estimates
// S, T, U from Stein values of m_j and v_a on the same sample. Sharing the
// sample makes the empirical orthogonality mean w <v_a, m_j> exactly zero.
// Directions whose T diagonal falls under 1e-12 * trace(T)/K are dropped
// (the raw field is captured by the mixed-score span); if everything left is
// degenerate relative to U the estimate fails with NotSPD.
MomentEstimate estimate_moments(const ModelSpec& model, const Vector& theta0,
                                const std::vector<VectorField>& raw_fields,
                                int m, RngStream rng);

// Improved test functions f_j = m_j - sum_a (S T^-1)_{ja} v_a.
std::vector<VectorField> improved_fields(const MomentEstimate& me);

// Per-coordinate estimate of the efficiency of the improved estimator
// relative to plain score matching:
//   1 - (G^-1 S T^-1 S' G^-1)_jj / (G^-1 U G^-1)_jj.
// Values are <= 1; smaller is better.
Vector are_estimate(const MomentMatrices& mm);

}  // namespace smom
