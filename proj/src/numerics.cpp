#include "smom/numerics.hpp"

#include <cmath>
#include <limits>

namespace smom {

namespace {

void check_symmetric(const Matrix& a, const char* who) {
  if (a.rows() != a.cols()) throw InvalidShape(std::string(who) + ": matrix not square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidShape(std::string(who) + ": matrix not symmetric");
}

}  // namespace

Matrix solve_spd(const Matrix& a, const Matrix& b) {
  check_symmetric(a, "solve_spd");
  if (a.rows() != b.rows()) throw InvalidShape("solve_spd: rhs rows mismatch");
  const int n = static_cast<int>(a.rows());
  const double base = a.trace() / n;
  const double jitters[] = {0.0, 1e-12, 1e-10, 1e-8};
  for (double j : jitters) {
    Matrix aj = a;
    if (j != 0.0) aj.diagonal().array() += j * base;
    Eigen::LLT<Matrix> llt(aj);
    if (llt.info() != Eigen::Success) continue;
    Matrix x = llt.solve(b);
    const double resid = (a * x - b).cwiseAbs().maxCoeff();
    if (resid <= 1e-8 * (1.0 + b.cwiseAbs().maxCoeff())) return x;
  }
  throw NotSPD("solve_spd: matrix not positive definite after jitter ladder");
}

Vector solve_spd(const Matrix& a, const Vector& b) {
  return Vector(solve_spd(a, Matrix(b)));
}

Matrix sylvester_solve(const Matrix& sigma, const Matrix& rhs) {
  check_symmetric(sigma, "sylvester_solve");
  check_symmetric(rhs, "sylvester_solve rhs");
  if (sigma.rows() != rhs.rows()) throw InvalidShape("sylvester_solve: size mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  if (eig.info() != Eigen::Success) throw NotSPD("sylvester_solve: eigendecomposition failed");
  const Vector lam = eig.eigenvalues();
  if (lam.minCoeff() <= 0.0) throw NotSPD("sylvester_solve: sigma not positive definite");
  const Matrix& q = eig.eigenvectors();
  Matrix r = q.transpose() * rhs * q;
  for (int i = 0; i < r.rows(); ++i)
    for (int j = 0; j < r.cols(); ++j) r(i, j) /= lam(i) + lam(j);
  Matrix s = q * r * q.transpose();
  return 0.5 * (s + s.transpose());
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t mix64(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243F6A8885A308D3ull;
  for (std::uint64_t p : parts) {
    std::uint64_t x = p ^ (h >> 17);
    h ^= splitmix64(x) + 0x9E3779B97F4A7C15ull + (h << 12) + (h >> 4);
  }
  std::uint64_t x = h;
  return splitmix64(x);
}

std::uint64_t tag64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

Rng::Rng(RngStream id) {
  std::uint64_t x = id.seed;
  (void)splitmix64(x);
  x ^= 0x6A09E667F3BCC909ull + id.stream + (x << 6) + (x >> 2);
  for (auto& s : s_) s = splitmix64(x);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

namespace {
inline std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
}  // namespace

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("gamma: shape and rate must be positive");
  if (shape < 1.0) {
    // Boost the shape, then scale back (Marsaglia-Tsang trick for a < 1).
    double u;
    do {
      u = uniform01();
    } while (u <= 0.0);
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u;
    do {
      u = uniform01();
    } while (u <= 0.0);
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v / rate;
  }
}

Vector Rng::normal_vector(int n) {
  Vector out(n);
  for (int i = 0; i < n; ++i) out(i) = normal();
  return out;
}

}  // namespace smom
