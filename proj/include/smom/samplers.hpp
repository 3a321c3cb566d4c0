#pragma once

#include "smom/models.hpp"

namespace smom {

// Exact samplers. Every routine is deterministic given its stream.

// |X|^(2 beta) ~ Gamma(1/(2 beta), rate theta), fair random sign.
std::vector<Vector> sample_gn(int beta, double theta, int n, RngStream stream);

// X^2 ~ Gamma(beta + 1/2, rate theta), fair random sign.
std::vector<Vector> sample_gg(int beta, double theta, int n, RngStream stream);

std::vector<Vector> sample_mvn(const Vector& mu, const Matrix& sigma, int n,
                               RngStream stream);

// Uniform proposals: |g|/||g|| for the sphere orthant, QR factor with
// positive R diagonal for the Stiefel manifold (Haar).
Vector sample_uniform_sphere_orthant(int p, Rng& rng);
Matrix sample_uniform_stiefel(int p, int k, Rng& rng);

// Rejection samplers with exact log-density bounds. The PPI bound maximizes
// y' A y + mu' y over the probability simplex by face enumeration; the
// Bingham bound is the sum of the k largest eigenvalues of A. Both add a
// small scale-aware safety margin (slack only lowers acceptance, never skews
// the draw); an accept ratio above one raises BoundViolation.
double ppi_rejection_bound(const Matrix& a, const Vector& mu);
double bingham_rejection_bound(const Matrix& a, int k);
std::vector<Vector> sample_ppi_tilt(const Matrix& a, const Vector& mu, int n,
                                    RngStream stream);
std::vector<Vector> sample_bingham_tilt(const Matrix& a, int k, int n,
                                        RngStream stream);

// Model-facing wrappers (dispatch through the model's own sampler).
std::vector<Vector> sample_ppi(const ModelSpec& model, const Vector& theta,
                               int n, RngStream stream);
std::vector<Vector> sample_bingham(const ModelSpec& model, const Vector& theta,
                                   int n, RngStream stream);

}  // namespace smom
