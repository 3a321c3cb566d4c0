#include "smom/estimators.hpp"

#include <cmath>
#include <stdexcept>

#include "smom/stein.hpp"

namespace smom {

namespace {

double ipow(double x, int n) {
  double r = 1;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

void check_scalar_data(const std::vector<Vector>& data) {
  if (data.empty()) throw InvalidShape("estimator: data is empty");
  for (const Vector& x : data)
    if (x.size() != 1) throw InvalidShape("estimator: expected scalar data");
}

Vector solve_moment_system(const Matrix& g, const Vector& rhs, double* condition) {
  const int d = static_cast<int>(g.rows());
  Eigen::JacobiSVD<Matrix> svd(g);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(d - 1);
  if (smax <= 0 || smin <= smax * 1e-12)
    throw SingularSystem("smom_expfam: moment matrix condition exceeds 1e12");
  *condition = smax / smin;
  Vector theta = -Eigen::FullPivLU<Matrix>(g).solve(rhs);
  if (!theta.allFinite())
    throw SingularSystem("smom_expfam: solve produced non-finite estimate");
  return theta;
}

}  // namespace

EstimateRecord smom_expfam(const ModelSpec& model,
                           const std::vector<VectorField>& fields,
                           const std::vector<Vector>& data) {
  const int d = model.param_dim;
  if (!model.expfam)
    throw std::invalid_argument("smom_expfam: model is not an exponential family");
  if (static_cast<int>(fields.size()) != d)
    throw InvalidShape("smom_expfam: need one test function per parameter");
  if (static_cast<int>(data.size()) < d)
    throw InvalidShape("smom_expfam: need at least d observations");
  for (const Vector& x : data)
    if (!model.domain.contains(x))
      throw DomainViolation("smom_expfam: observation outside the model domain");

  const Vector theta0 = Vector::Zero(d);
  std::vector<VectorField> mixed;
  mixed.reserve(d);
  for (int j = 0; j < d; ++j) mixed.push_back(model.mixed_score_field(theta0, j));

  Matrix g = Matrix::Zero(d, d);
  std::vector<Vector> fv(d), mv(d);
  for (const Vector& x : data) {
    const double w = model.weight(x);
    for (int j = 0; j < d; ++j) fv[j] = fields[j](x);
    for (int k = 0; k < d; ++k) mv[k] = mixed[k](x);
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) g(j, k) += w * fv[j].dot(mv[k]);
  }

  // Stein values at theta = 0 are exactly div_M(w f) + w<f, grad_M b>
  Matrix av = stein_values(model, theta0, fields, data);
  Vector rhs = av.colwise().sum();

  EstimateRecord rec;
  rec.estimator = "smom";
  rec.theta_hat = solve_moment_system(g, rhs, &rec.condition);
  return rec;
}

EstimateRecord score_matching(const ModelSpec& model,
                              const std::vector<Vector>& data) {
  const int d = model.param_dim;
  if (!model.expfam)
    throw std::invalid_argument("score_matching: model is not an exponential family");
  const Vector theta0 = Vector::Zero(d);
  std::vector<VectorField> fields;
  fields.reserve(d);
  for (int j = 0; j < d; ++j) fields.push_back(model.mixed_score_field(theta0, j));
  EstimateRecord rec = smom_expfam(model, fields, data);
  rec.estimator = "score_matching";
  return rec;
}

EstimateRecord gn_mle(int beta, const std::vector<Vector>& data) {
  check_scalar_data(data);
  double s = 0;
  for (const Vector& x : data) s += ipow(x(0), 2 * beta);
  const double den = 2.0 * beta * s;
  if (std::abs(den) < 1e-300)
    throw DegenerateData("gn_mle: degenerate denominator");
  EstimateRecord rec;
  rec.estimator = "gn_mle";
  rec.theta_hat = Vector::Constant(1, static_cast<double>(data.size()) / den);
  return rec;
}

EstimateRecord gn_sm(int beta, const std::vector<Vector>& data) {
  check_scalar_data(data);
  double s1 = 0, s2 = 0;
  for (const Vector& x : data) {
    s1 += ipow(x(0), 2 * beta - 2);
    s2 += ipow(x(0), 4 * beta - 2);
  }
  if (std::abs(s2) < 1e-300)
    throw DegenerateData("gn_sm: degenerate denominator");
  EstimateRecord rec;
  rec.estimator = "gn_sm";
  rec.theta_hat =
      Vector::Constant(1, (2.0 * beta - 1) / (2.0 * beta) * (s1 / s2));
  return rec;
}

EstimateRecord gn_smom(int beta, const VectorField& f,
                       const std::vector<Vector>& data) {
  check_scalar_data(data);
  if (f.domain() != euclidean(1))
    throw DomainMismatch("gn_smom: test function must be a scalar field");
  double num = 0, den = 0;
  for (const Vector& x : data) {
    num += f.jacobian(x)(0, 0);
    den += ipow(x(0), 2 * beta - 1) * f(x)(0);
  }
  den *= 2.0 * beta;
  if (std::abs(den) < 1e-300)
    throw DegenerateData("gn_smom: degenerate denominator");
  EstimateRecord rec;
  rec.estimator = "gn_smom";
  rec.theta_hat = Vector::Constant(1, num / den);
  return rec;
}

EstimateRecord improved_estimator(const ModelSpec& model,
                                  const std::vector<Vector>& data,
                                  const std::optional<Vector>& theta0,
                                  const std::vector<VectorField>& raw_fields,
                                  int m, RngStream rng) {
  const Vector th0 =
      theta0 ? *theta0 : score_matching(model, data).theta_hat;
  EstimateRecord rec;
  rec.estimator = theta0 ? "improved" : "improved_plugin";
  try {
    MomentEstimate me = estimate_moments(model, th0, raw_fields, m, rng);
    std::vector<VectorField> fields = improved_fields(me);
    EstimateRecord base = smom_expfam(model, fields, data);
    rec.theta_hat = std::move(base.theta_hat);
    rec.condition = base.condition;
    rec.k_used = static_cast<int>(me.v.size());
    rec.are = are_estimate(me.mm);
  } catch (const NotSPD&) {
    EstimateRecord sm = score_matching(model, data);
    rec.theta_hat = std::move(sm.theta_hat);
    rec.condition = sm.condition;
    rec.fell_back = true;
  }
  return rec;
}

EstimateRecord newton_smom(const ModelSpec& model, const ThetaFieldsFn& fields,
                           const std::vector<Vector>& data,
                           const Vector& theta_init) {
  const int d = model.param_dim;
  if (theta_init.size() != d)
    throw InvalidShape("newton_smom: initial point has wrong dimension");
  if (data.empty()) throw InvalidShape("newton_smom: data is empty");
  const double h = 1e-5;
  const double tol = 1e-10;
  const int max_iter = 50;

  auto moment_map = [&](const Vector& th) {
    std::vector<VectorField> flds = fields(th);
    if (static_cast<int>(flds.size()) != d)
      throw InvalidShape("newton_smom: need one test function per parameter");
    Matrix av = stein_values(model, th, flds, data);
    return Vector(av.colwise().mean());
  };

  EstimateRecord rec;
  rec.estimator = "newton_smom";
  Vector theta = theta_init;
  Vector mval = moment_map(theta);
  int it = 0;
  while (mval.lpNorm<Eigen::Infinity>() >= tol) {
    if (it == max_iter)
      throw NoConvergence("newton_smom: no convergence in 50 iterations");
    Matrix jac(d, d);
    for (int k = 0; k < d; ++k) {
      Vector tp = theta, tm = theta;
      tp(k) += h;
      tm(k) -= h;
      jac.col(k) = (moment_map(tp) - moment_map(tm)) / (2 * h);
    }
    if (!jac.allFinite())
      throw NoConvergence("newton_smom: moment jacobian is not finite");
    Eigen::FullPivLU<Matrix> lu(jac);
    if (!lu.isInvertible())
      throw NoConvergence("newton_smom: singular moment jacobian");
    {
      Eigen::JacobiSVD<Matrix> svd(jac);
      rec.condition = svd.singularValues()(0) / svd.singularValues()(d - 1);
    }
    const Vector step = -lu.solve(mval);
    const double m0 = mval.lpNorm<Eigen::Infinity>();
    double alpha = 1.0;
    bool moved = false;
    for (int half = 0; half < 25; ++half, alpha /= 2) {
      Vector cand = theta + alpha * step;
      Vector mc = moment_map(cand);
      if (mc.allFinite() && mc.lpNorm<Eigen::Infinity>() < m0) {
        theta = std::move(cand);
        mval = std::move(mc);
        moved = true;
        break;
      }
    }
    if (!moved) throw NoConvergence("newton_smom: line search stalled");
    ++it;
  }
  rec.iterations = it;
  rec.theta_hat = std::move(theta);
  return rec;
}

}  // namespace smom
