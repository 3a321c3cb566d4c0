#include "smom/vector_fields.hpp"

#include <cmath>

namespace smom {

VectorField VectorField::leaf(Domain domain, std::string tag, ValueFn value,
                              JacobianFn jac, DivergenceFn div) {
  auto impl = std::make_shared<Impl>();
  impl->domain = domain;
  impl->tag = std::move(tag);
  impl->value = std::move(value);
  impl->jac = std::move(jac);
  impl->div = std::move(div);
  return VectorField(std::move(impl));
}

Vector VectorField::operator()(const Vector& x) const {
  if (impl_->terms.empty()) return impl_->value(x);
  Vector out = Vector::Zero(impl_->domain.ambient_dim());
  for (const auto& [c, f] : impl_->terms) out += c * VectorField(f)(x);
  return out;
}

bool VectorField::has_jacobian() const {
  if (impl_->terms.empty()) return static_cast<bool>(impl_->jac);
  for (const auto& [c, f] : impl_->terms)
    if (!VectorField(f).has_jacobian()) return false;
  return true;
}

Matrix VectorField::jacobian(const Vector& x) const {
  if (impl_->terms.empty()) {
    if (!impl_->jac) throw MissingJacobian("field '" + impl_->tag + "' has no jacobian");
    return impl_->jac(x);
  }
  const int n = impl_->domain.ambient_dim();
  Matrix out = Matrix::Zero(n, n);
  for (const auto& [c, f] : impl_->terms) out += c * VectorField(f).jacobian(x);
  return out;
}

bool VectorField::has_divergence() const {
  if (impl_->terms.empty()) return static_cast<bool>(impl_->div) || static_cast<bool>(impl_->jac);
  for (const auto& [c, f] : impl_->terms)
    if (!VectorField(f).has_divergence()) return false;
  return true;
}

double VectorField::divergence(const Vector& x) const {
  if (impl_->terms.empty()) {
    if (impl_->div) return impl_->div(x);
    if (impl_->jac) return impl_->jac(x).trace();
    throw MissingJacobian("field '" + impl_->tag + "' has neither divergence nor jacobian");
  }
  double out = 0.0;
  for (const auto& [c, f] : impl_->terms) out += c * VectorField(f).divergence(x);
  return out;
}

namespace {

void flatten_into(const VectorField::Impl* impl, double scale,
                  std::vector<std::pair<double, const VectorField::Impl*>>& out) {
  if (impl->terms.empty()) {
    out.emplace_back(scale, impl);
    return;
  }
  for (const auto& [c, f] : impl->terms) flatten_into(f.get(), scale * c, out);
}

}  // namespace

std::vector<std::pair<double, const VectorField::Impl*>> VectorField::flatten() const {
  std::vector<std::pair<double, const Impl*>> out;
  flatten_into(impl_.get(), 1.0, out);
  return out;
}

VectorField combine(const std::vector<VectorField>& fields, const Vector& coeffs) {
  if (fields.empty()) throw InvalidShape("combine: no fields");
  if (static_cast<int>(fields.size()) != coeffs.size())
    throw InvalidShape("combine: coefficient count mismatch");
  const Domain& d = fields.front().domain();
  for (const auto& f : fields)
    if (!(f.domain() == d)) throw DomainMismatch("combine: fields on different domains");
  auto impl = std::make_shared<VectorField::Impl>();
  impl->domain = d;
  impl->tag = "combination";
  impl->terms.reserve(fields.size());
  for (size_t i = 0; i < fields.size(); ++i)
    impl->terms.emplace_back(coeffs(static_cast<int>(i)), fields[i].impl_);
  return VectorField(std::move(impl));
}

VectorField projected_field(const Domain& domain, std::string tag,
                            VectorField::ValueFn raw_value,
                            VectorField::JacobianFn raw_jac) {
  if (!domain.is_manifold())
    return VectorField::leaf(domain, std::move(tag), std::move(raw_value), std::move(raw_jac));
  auto value = [domain, raw_value](const Vector& x) {
    return project_tangent(domain, x, raw_value(x));
  };
  VectorField::JacobianFn jac;
  if (raw_jac) {
    jac = [domain, raw_value, raw_jac](const Vector& x) {
      const int n = domain.ambient_dim();
      const Vector fx = raw_value(x);
      const Matrix jraw = raw_jac(x);
      Matrix out(n, n);
      for (int c = 0; c < n; ++c) {
        Vector ec = Vector::Unit(n, c);
        out.col(c) = project_tangent_point_derivative(domain, x, ec, fx) +
                     project_tangent(domain, x, jraw.col(c));
      }
      return out;
    };
  }
  return VectorField::leaf(domain, std::move(tag), std::move(value), std::move(jac));
}

namespace {

struct MlpWeights {
  std::vector<Matrix> w;
  std::vector<Vector> b;
};

std::shared_ptr<const MlpWeights> draw_mlp(int p, RngStream stream) {
  const std::vector<int> widths = {p, 3, 3, 3, 3, 3, p};
  Rng rng(stream);
  auto wts = std::make_shared<MlpWeights>();
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    Matrix w(widths[l + 1], widths[l]);
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) w(i, j) = rng.normal();
    Vector b(widths[l + 1]);
    for (int i = 0; i < b.size(); ++i) b(i) = rng.normal();
    wts->w.push_back(std::move(w));
    wts->b.push_back(std::move(b));
  }
  return wts;
}

}  // namespace

VectorField mlp_field(const Domain& domain, RngStream weights) {
  const int p = domain.ambient_dim();
  auto wts = draw_mlp(p, weights);
  const size_t layers = wts->w.size();
  const int bufw = std::max(p, 3);
  // forward passes run inside tight Monte Carlo loops; thread-local
  // scratch keeps them allocation-free
  auto value = [wts, layers, bufw](const Vector& x) {
    thread_local Vector s0, s1;
    if (s0.size() < bufw) {
      s0.resize(bufw);
      s1.resize(bufw);
    }
    Vector* cur = &s0;
    Vector* nxt = &s1;
    int n = static_cast<int>(x.size());
    cur->head(n) = x;
    for (size_t l = 0; l < layers; ++l) {
      const int r = static_cast<int>(wts->w[l].rows());
      nxt->head(r).noalias() = wts->w[l] * cur->head(n);
      nxt->head(r) += wts->b[l];
      if (l + 1 < layers) nxt->head(r) = nxt->head(r).array().tanh();
      std::swap(cur, nxt);
      n = r;
    }
    return Vector(cur->head(n));
  };
  auto jac = [wts, layers, p, bufw](const Vector& x) {
    thread_local Vector s0, s1;
    thread_local Matrix j0, j1;
    if (j0.rows() < bufw || j0.cols() < bufw) {
      s0.resize(bufw);
      s1.resize(bufw);
      j0.resize(bufw, bufw);
      j1.resize(bufw, bufw);
    }
    Vector* hc = &s0;
    Vector* hn = &s1;
    Matrix* jc = &j0;
    Matrix* jn = &j1;
    int n = p;
    hc->head(n) = x;
    jc->block(0, 0, n, p).setIdentity();
    for (size_t l = 0; l < layers; ++l) {
      const int r = static_cast<int>(wts->w[l].rows());
      hn->head(r).noalias() = wts->w[l] * hc->head(n);
      hn->head(r) += wts->b[l];
      jn->block(0, 0, r, p).noalias() = wts->w[l] * jc->block(0, 0, n, p);
      if (l + 1 < layers) {
        hn->head(r) = hn->head(r).array().tanh();
        // d tanh(a) = (1 - tanh(a)^2) da
        jn->block(0, 0, r, p).array().colwise() *=
            1.0 - hn->head(r).array().square();
      }
      std::swap(hc, hn);
      std::swap(jc, jn);
      n = r;
    }
    return Matrix(jc->block(0, 0, p, p));
  };
  char tagbuf[64];
  std::snprintf(tagbuf, sizeof(tagbuf), "mlp(%llu,%llu)",
                static_cast<unsigned long long>(weights.seed),
                static_cast<unsigned long long>(weights.stream));
  return projected_field(domain, tagbuf, std::move(value), std::move(jac));
}

}  // namespace smom
