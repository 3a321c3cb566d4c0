#pragma once

#include <functional>
#include <memory>
#include <string>

#include "smom/moments.hpp"

namespace smom {

// Closed-form Wasserstein score functions Phi_j of a parametric family:
// the solutions of A_theta(grad Phi_j) = -d/dtheta_j log q_theta with
// E_theta[Phi_j] = 0. Only families with explicit solutions are provided.
struct WScore {
  std::string family;
  int d = 0;
  std::function<double(const Vector& theta, int j, const Vector& x)> eval;
  std::function<Vector(const Vector& theta, int j, const Vector& x)> grad;
  // grad Phi_j as a field (with analytic Jacobian) for Stein evaluation
  std::function<VectorField(const Vector& theta, int j)> grad_field;
};

// Normal family N(mu, sigma), parameters packed as in multivariate_normal:
// Phi_mu_j = x_j - mu_j; Phi_sigma_jk = -tr(S_jk sigma)/2 + (x-mu)'S_jk(x-mu)/2
// with S_jk the Lyapunov solution for the (j,k) coordinate direction.
WScore wscore_normal(const Vector& mu0, const Matrix& sigma0);

// Generalized normal: Phi = -x^2/(4 b th) + Gamma(3/(2b))/(4 b th^(1+1/b) Gamma(1/(2b))).
WScore wscore_gn(int beta);

// Generalized gamma: Phi = -x^2/(4 th) + (2b+1)/(8 th^2).
WScore wscore_gg(int beta);

// A_theta(grad Phi_j)(x) + fisher_score(theta, j, x); zero when Phi_j solves
// the defining equation.
double pde_residual(const ModelSpec& model, const Vector& theta, const WScore& ws,
                    int j, const Vector& x);

// Asymptotic variance ratio AVar[MLE]/AVar[SM] of the generalized normal
// family: ((2b-1)/(2(3b-2))) Gamma(1-1/(2b))^2/(Gamma(1+1/(2b)) Gamma(2-3/(2b))).
// 1 at b = 1, decreasing toward 1/3.
double are_closed_form(int beta);

struct SpanTest {
  double residual = 0;  // max over j of relative least-squares residual
  Matrix lambda;        // fitted coefficients fisher_j ~ sum_k lambda_jk Phi_k
};

// Regresses each Fisher score onto the Wasserstein scores over an MC sample.
// A residual near zero certifies that the scores lie in the span, the
// condition under which score matching is asymptotically efficient.
SpanTest efficiency_span_test(const ModelSpec& model, const Vector& theta,
                              const WScore& ws, int m, RngStream rng);

struct GapEstimate {
  Matrix gap;       // G^-1 E[(A u)(A u)'] G^-1 = AVar[SM] - AVar[MLE]
  Matrix inner;     // MC mean of (A u_j)(A u_k)
  Matrix inner_se;  // standard errors of the inner entries
  Matrix f_hat;     // mean <grad Phi_j, mixed_k> (equals Fisher information)
  Matrix g_hat;     // mean <mixed_j, mixed_k>
  std::shared_ptr<const McSample> sample;
};

// Estimates the efficiency gap between score matching and maximum likelihood
// through the orthogonal elements u_j = sum_k (G F^-1)_{jk} grad Phi_k -
// mixed_j, whose Stein values capture exactly the excess variance.
GapEstimate mle_sm_gap(const ModelSpec& model, const Vector& theta,
                       const WScore& ws, int m, RngStream rng);

}  // namespace smom
