#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smom/moments.hpp"

namespace smom {

struct EstimateRecord {
  std::string estimator;
  Vector theta_hat;
  double condition = 0;    // condition number of the solve matrix (0: no solve)
  int k_used = 0;          // orthogonalized directions used by the improved estimator
  int iterations = 0;      // Newton iterations taken
  bool fell_back = false;  // improved estimator fell back to score matching
  Vector are;              // per-parameter efficiency estimate, when available
};

// Method-of-moments estimator for an exponential family from test functions
// f_1..f_d: solves -G^-1 rhs with G_jk = sum_i w<f_j, grad_M t_k>(X_i) and
// rhs_j = sum_i [div_M(w f_j) + w<f_j, grad_M b>](X_i).
EstimateRecord smom_expfam(const ModelSpec& model,
                           const std::vector<VectorField>& fields,
                           const std::vector<Vector>& data);

// The same estimator with f_j = grad_M t_j (shares the smom_expfam code path).
EstimateRecord score_matching(const ModelSpec& model,
                              const std::vector<Vector>& data);

// Scalar generalized-normal closed forms.
EstimateRecord gn_mle(int beta, const std::vector<Vector>& data);
EstimateRecord gn_sm(int beta, const std::vector<Vector>& data);
// theta_hat = sum f'(X_i) / (2 b sum X_i^(2b-1) f(X_i)) for a scalar field f.
EstimateRecord gn_smom(int beta, const VectorField& f,
                       const std::vector<Vector>& data);

// Orthogonalized-correction estimator: runs estimate_moments at theta0 (or at
// the score matching estimate when theta0 is empty), solves smom_expfam with
// the improved fields. Falls back to score matching with a flag when the
// correction directions degenerate.
EstimateRecord improved_estimator(const ModelSpec& model,
                                  const std::vector<Vector>& data,
                                  const std::optional<Vector>& theta0,
                                  const std::vector<VectorField>& raw_fields,
                                  int m, RngStream rng);

using ThetaFieldsFn = std::function<std::vector<VectorField>(const Vector&)>;

// Damped Newton on the empirical moment map theta -> mean_i A_theta f_theta,j(X_i)
// for test functions that may depend on theta; finite-difference Jacobian.
EstimateRecord newton_smom(const ModelSpec& model, const ThetaFieldsFn& fields,
                           const std::vector<Vector>& data,
                           const Vector& theta_init);

}  // namespace smom
