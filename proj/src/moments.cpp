#include "smom/moments.hpp"

#include <stdexcept>

namespace smom {

MomentEstimate estimate_moments(const ModelSpec& model, const Vector& theta0,
                                const std::vector<VectorField>& raw_fields,
                                int m, RngStream rng) {
  const int d = model.param_dim;
  const int k = static_cast<int>(raw_fields.size());
  if (k < 1) throw InvalidShape("estimate_moments: need at least one raw field");
  if (m < 2) throw InvalidShape("estimate_moments: sample size too small");
  if (!model.has_sampler())
    throw std::invalid_argument("estimate_moments: model has no sampler");
  for (const auto& f : raw_fields)
    if (!f.valid() || f.domain() != model.domain)
      throw DomainMismatch("estimate_moments: raw field on the wrong domain");

  auto sample = std::make_shared<McSample>();
  sample->points = model.sample(theta0, m, rng);
  sample->theta0 = theta0;
  sample->stream = rng;

  std::vector<VectorField> mixed;
  mixed.reserve(d);
  for (int j = 0; j < d; ++j) mixed.push_back(model.mixed_score_field(theta0, j));

  Matrix f = Matrix::Zero(k, d), g = Matrix::Zero(d, d);
  std::vector<Vector> mv(d), rv(k);
  for (const Vector& x : sample->points) {
    const double w = model.weight(x);
    for (int j = 0; j < d; ++j) mv[j] = mixed[j](x);
    for (int a = 0; a < k; ++a) rv[a] = raw_fields[a](x);
    for (int j = 0; j < d; ++j)
      for (int kk = j; kk < d; ++kk) g(j, kk) += w * mv[j].dot(mv[kk]);
    for (int a = 0; a < k; ++a)
      for (int j = 0; j < d; ++j) f(a, j) += w * rv[a].dot(mv[j]);
  }
  f /= m;
  g /= m;
  g = Matrix(g.selfadjointView<Eigen::Upper>());

  // coefficients F G^-1 (K x d)
  Matrix coef = solve_spd(g, Matrix(f.transpose())).transpose();

  std::vector<VectorField> v;
  v.reserve(k);
  std::vector<VectorField> parts;
  for (int a = 0; a < k; ++a) {
    parts.clear();
    parts.push_back(raw_fields[a]);
    Vector c(d + 1);
    c(0) = 1.0;
    for (int j = 0; j < d; ++j) {
      parts.push_back(mixed[j]);
      c(j + 1) = -coef(a, j);
    }
    v.push_back(combine(parts, c));
  }

  std::vector<VectorField> all;
  all.reserve(d + k);
  for (auto& mj : mixed) all.push_back(mj);
  for (auto& va : v) all.push_back(va);
  Matrix av = stein_values(model, theta0, all, sample->points);

  Matrix u = (av.leftCols(d).transpose() * av.leftCols(d)) / m;
  Matrix t = (av.rightCols(k).transpose() * av.rightCols(k)) / m;
  Matrix s = (av.leftCols(d).transpose() * av.rightCols(k)) / m;
  u = Matrix(0.5 * (u + u.transpose()));
  t = Matrix(0.5 * (t + t.transpose()));

  // drop directions whose Stein image is numerically captured by the
  // mixed-score span
  const double drop_floor = 1e-12 * t.trace() / k;
  std::vector<int> keep;
  for (int a = 0; a < k; ++a)
    if (t(a, a) > drop_floor) keep.push_back(a);
  if (keep.empty() ||
      [&] {
        double tr = 0;
        for (int a : keep) tr += t(a, a);
        return tr / static_cast<double>(keep.size()) <=
               1e-20 * u.trace() / d;
      }())
    throw NotSPD("estimate_moments: raw fields lie in the mixed-score span");

  MomentEstimate me;
  if (static_cast<int>(keep.size()) < k) {
    const int k2 = static_cast<int>(keep.size());
    Matrix f2(k2, d), s2(d, k2), t2(k2, k2);
    std::vector<VectorField> v2;
    for (int a = 0; a < k2; ++a) {
      f2.row(a) = f.row(keep[a]);
      s2.col(a) = s.col(keep[a]);
      for (int b = 0; b < k2; ++b) t2(a, b) = t(keep[a], keep[b]);
      v2.push_back(v[keep[a]]);
    }
    f = std::move(f2);
    s = std::move(s2);
    t = std::move(t2);
    v = std::move(v2);
  }

  me.mm = MomentMatrices{std::move(f), std::move(g), std::move(s), std::move(t),
                         std::move(u), std::move(sample)};
  me.v = std::move(v);
  me.mixed = std::move(mixed);
  return me;
}

std::vector<VectorField> improved_fields(const MomentEstimate& me) {
  const int d = static_cast<int>(me.mixed.size());
  const int k = static_cast<int>(me.v.size());
  // (T^-1 S')(a, j) = (S T^-1)_{ja}
  Matrix r = solve_spd(me.mm.t, Matrix(me.mm.s.transpose()));
  std::vector<VectorField> out;
  out.reserve(d);
  std::vector<VectorField> parts;
  for (int j = 0; j < d; ++j) {
    parts.clear();
    parts.push_back(me.mixed[j]);
    Vector c(k + 1);
    c(0) = 1.0;
    for (int a = 0; a < k; ++a) {
      parts.push_back(me.v[a]);
      c(a + 1) = -r(a, j);
    }
    out.push_back(combine(parts, c));
  }
  return out;
}

Vector are_estimate(const MomentMatrices& mm) {
  const int d = static_cast<int>(mm.g.rows());
  Matrix w = solve_spd(mm.g, mm.s);                        // G^-1 S, d x K
  Matrix z = solve_spd(mm.t, Matrix(w.transpose()));       // T^-1 S' G^-1
  Matrix gain = w * z;                                     // G^-1 S T^-1 S' G^-1
  Matrix gu = solve_spd(mm.g, mm.u);                       // G^-1 U
  Matrix denom = solve_spd(mm.g, Matrix(gu.transpose())).transpose();  // G^-1 U G^-1
  Vector out(d);
  for (int j = 0; j < d; ++j) out(j) = 1.0 - gain(j, j) / denom(j, j);
  return out;
}

}  // namespace smom
