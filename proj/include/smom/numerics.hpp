#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <string_view>

#include "smom/errors.hpp"

namespace smom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Solve a*x = b for symmetric positive definite a. Cholesky with a diagonal
// jitter ladder (1e-12, 1e-10, 1e-8 of trace/n) before giving up; throws
// NotSPD when the matrix stays unfactorizable or the residual stays large.
Vector solve_spd(const Matrix& a, const Vector& b);
Matrix solve_spd(const Matrix& a, const Matrix& b);

// Solve S*sigma + sigma*S = rhs for symmetric S, with sigma SPD and rhs
// symmetric, through the eigendecomposition of sigma.
Matrix sylvester_solve(const Matrix& sigma, const Matrix& rhs);

// 64-bit mixing utilities used to derive independent stream ids.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::initializer_list<std::uint64_t> parts);
std::uint64_t tag64(std::string_view s);

struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// Deterministic generator: equal (seed, stream) pairs give bit-identical
// sequences on every platform, distinct streams are independent for practical
// purposes. xoshiro256++ state seeded through splitmix64; the normal and
// gamma samplers are implemented here (not std::) so draws stay reproducible
// across standard libraries.
class Rng {
 public:
  explicit Rng(RngStream id);

  std::uint64_t next_u64();
  double uniform01();  // [0, 1)
  double normal();
  double gamma(double shape, double rate);
  Vector normal_vector(int n);

 private:
  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace smom
