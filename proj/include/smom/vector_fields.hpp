#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "smom/domains.hpp"

namespace smom {

// A vector field on a domain. Leaves carry closures; linear combinations keep
// their terms so evaluation, Jacobians and divergences distribute exactly and
// shared sub-fields can be recognized by identity when evaluating in bulk.
// On manifold domains values are tangent at on-manifold points.
class VectorField {
 public:
  using ValueFn = std::function<Vector(const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&)>;
  using DivergenceFn = std::function<double(const Vector&)>;

  struct Impl {
    Domain domain;
    std::string tag;
    ValueFn value;
    JacobianFn jac;
    DivergenceFn div;
    std::vector<std::pair<double, std::shared_ptr<const Impl>>> terms;
  };

  VectorField() = default;

  static VectorField leaf(Domain domain, std::string tag, ValueFn value,
                          JacobianFn jac = nullptr, DivergenceFn div = nullptr);

  const Domain& domain() const { return impl_->domain; }
  const std::string& tag() const { return impl_->tag; }
  bool valid() const { return impl_ != nullptr; }

  Vector operator()(const Vector& x) const;
  bool has_jacobian() const;
  Matrix jacobian(const Vector& x) const;  // throws MissingJacobian
  bool has_divergence() const;
  // Euclidean analytic divergence: the dedicated closure if present, else the
  // Jacobian trace. Manifold divergences live in the stein module.
  double divergence(const Vector& x) const;

  // Leaves of the combination tree with accumulated coefficients. Pointers
  // stay valid while this field (or any copy) is alive.
  std::vector<std::pair<double, const Impl*>> flatten() const;

  const Impl* impl() const { return impl_.get(); }

 private:
  explicit VectorField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
  friend VectorField combine(const std::vector<VectorField>&, const Vector&);
};

// coeffs(i) * fields[i], summed. All fields must share a domain.
VectorField combine(const std::vector<VectorField>& fields, const Vector& coeffs);

// Wrap an ambient formula into a field. On manifold domains the value is
// projected to the tangent space and the Jacobian picks up the derivative of
// the base-point projection.
VectorField projected_field(const Domain& domain, std::string tag,
                            VectorField::ValueFn raw_value,
                            VectorField::JacobianFn raw_jac);

// Fully connected tanh network with layer widths [p, 3, 3, 3, 3, 3, p],
// linear output layer, all weights and biases N(0,1) drawn from the stream
// (per layer: weight matrix row-major, then bias). On manifold domains the
// output is composed with the tangent projection.
VectorField mlp_field(const Domain& domain, RngStream weights);

}  // namespace smom
