#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "smom/vector_fields.hpp"

namespace smom {

// Exponential-family pieces: log q~_theta(x) = theta . t(x) + b(x), with
// ambient gradients. Laplacians/Hessians of t are provided where analytic;
// manifold second-order quantities go through the stein module instead.
struct ExpFamParts {
  int d = 0;
  std::function<double(const Vector&, int)> t;
  std::function<Vector(const Vector&, int)> grad_t;
  std::function<Matrix(const Vector&, int)> hess_t;   // optional
  std::function<double(const Vector&)> log_base;      // optional (b = 0)
  std::function<Vector(const Vector&)> grad_base;     // optional
};

// A (possibly non-normalized) model on a domain. All gradients are ambient;
// mixed-score fields are tangent on manifold domains.
struct ModelSpec {
  Domain domain;
  int param_dim = 0;
  std::string name;

  std::function<double(const Vector& theta, const Vector& x)> log_unnorm;
  std::function<Vector(const Vector& theta, const Vector& x)> grad_x_log;
  // field x -> grad_x d/dtheta_j log q~ (projected on manifolds)
  std::function<VectorField(const Vector& theta, int j)> mixed_score_field;
  // full score d/dtheta_j log q (normalized); empty when no closed form
  std::function<double(const Vector& theta, int j, const Vector& x)> fisher_score;
  std::function<double(const Vector& x)> weight;
  std::function<Vector(const Vector& x)> weight_grad;
  std::function<std::vector<Vector>(const Vector& theta, int n, RngStream)> sample;
  std::shared_ptr<const ExpFamParts> expfam;

  bool has_fisher() const { return static_cast<bool>(fisher_score); }
  bool has_sampler() const { return static_cast<bool>(sample); }
};

// q(x) ~ exp(-theta x^(2 beta)) on R, beta >= 1 integer; beta = 1 is
// N(0, 1/(2 theta)).
ModelSpec generalized_normal(int beta);

// q(x) ~ |x|^(2 beta) exp(-theta x^2) on R.
ModelSpec generalized_gamma(int beta);

// N(mu, sigma) parameterized by (mu, vech sigma); mu0/sigma0 fix the
// dimension and must be a valid member (sigma0 SPD).
ModelSpec multivariate_normal(const Vector& mu0, const Matrix& sigma0);

// Density ~ prod x_j^(1+2 beta_j) exp(x2' A x2 + mu' x2) on the positive
// sphere orthant, x2 = elementwise square. Identifiability: last row/column
// of A and last entry of mu are fixed to zero. Weight w(x) = prod x_j.
ModelSpec ppi_model(const Vector& beta, int p);

// Density ~ exp(tr(X' A X)) on the Stiefel manifold V_{k,p}, A symmetric
// with A_pp = 0.
ModelSpec matrix_bingham(int p, int k);

// Parameter packing. Symmetric free entries are stored diagonal-first
// (ascending), then off-diagonal in lexicographic order.
Vector mvn_pack(const Vector& mu, const Matrix& sigma);
void mvn_unpack(const Vector& theta, int p, Vector& mu, Matrix& sigma);
Vector ppi_pack(const Matrix& a, const Vector& mu);
void ppi_unpack(const Vector& theta, int p, Matrix& a, Vector& mu);
Vector bingham_pack(const Matrix& a);
Matrix bingham_unpack(const Vector& theta, int p);

// theta giving unit variance for the generalized normal with shape beta.
double gn_theta_star(int beta);

}  // namespace smom
