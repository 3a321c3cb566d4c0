#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "smom/domains.hpp"
#include "smom/errors.hpp"
#include "smom/estimators.hpp"
#include "smom/experiments.hpp"
#include "smom/models.hpp"
#include "smom/moments.hpp"
#include "smom/numerics.hpp"
#include "smom/samplers.hpp"
#include "smom/stein.hpp"
#include "smom/vector_fields.hpp"
#include "smom/wasserstein.hpp"

namespace py = pybind11;
using namespace smom;

PYBIND11_MODULE(_smom, m) {
  m.doc() = "Stein's method of moments for non-normalized models";

  py::register_exception<NotSPD>(m, "NotSPD", PyExc_RuntimeError);
  py::register_exception<InvalidShape>(m, "InvalidShape", PyExc_RuntimeError);
  py::register_exception<DomainViolation>(m, "DomainViolation", PyExc_RuntimeError);
  py::register_exception<DomainMismatch>(m, "DomainMismatch", PyExc_RuntimeError);
  py::register_exception<MissingJacobian>(m, "MissingJacobian", PyExc_RuntimeError);
  py::register_exception<MissingFisherScore>(m, "MissingFisherScore", PyExc_RuntimeError);
  py::register_exception<SingularSystem>(m, "SingularSystem", PyExc_RuntimeError);
  py::register_exception<DegenerateData>(m, "DegenerateData", PyExc_RuntimeError);
  py::register_exception<NoConvergence>(m, "NoConvergence", PyExc_RuntimeError);
  py::register_exception<BoundViolation>(m, "BoundViolation", PyExc_RuntimeError);

  // ---- numerics ----
  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"),
           py::arg("stream") = 0)
      .def_readwrite("seed", &RngStream::seed)
      .def_readwrite("stream", &RngStream::stream)
      .def("__repr__", [](const RngStream& s) {
        return "RngStream(seed=" + std::to_string(s.seed) +
               ", stream=" + std::to_string(s.stream) + ")";
      });

  m.def("solve_spd",
        py::overload_cast<const Matrix&, const Vector&>(&solve_spd),
        py::arg("a"), py::arg("b"));
  m.def("solve_spd",
        py::overload_cast<const Matrix&, const Matrix&>(&solve_spd),
        py::arg("a"), py::arg("b"));
  m.def("sylvester_solve", &sylvester_solve, py::arg("sigma"), py::arg("rhs"),
        "solve sigma X + X sigma = rhs for symmetric inputs");

  // ---- domains ----
  py::class_<Domain>(m, "Domain")
      .def_property_readonly("ambient_dim", &Domain::ambient_dim)
      .def_property_readonly("intrinsic_dim", &Domain::intrinsic_dim)
      .def_property_readonly("is_manifold", &Domain::is_manifold)
      .def("contains", &Domain::contains, py::arg("x"),
           py::arg("tol") = 1e-10)
      .def(py::self == py::self)
      .def("__repr__", [](const Domain& d) {
        switch (d.kind) {
          case DomainKind::Euclidean:
            return "euclidean(" + std::to_string(d.p) + ")";
          case DomainKind::SphereOrthant:
            return "sphere_orthant(" + std::to_string(d.p) + ")";
          default:
            return "stiefel(" + std::to_string(d.p) + ", " +
                   std::to_string(d.k) + ")";
        }
      });
  m.def("euclidean", &euclidean, py::arg("p"));
  m.def("sphere_orthant", &sphere_orthant, py::arg("p"));
  m.def("stiefel", &stiefel, py::arg("p"), py::arg("k"));
  m.def("project_tangent", &project_tangent, py::arg("domain"), py::arg("x"),
        py::arg("z"));
  m.def("tangent_basis", &tangent_basis, py::arg("domain"), py::arg("x"));
  m.def("retract", &retract, py::arg("domain"), py::arg("x"), py::arg("v"),
        py::arg("t"));

  // ---- vector fields ----
  py::class_<VectorField>(m, "VectorField")
      .def("__call__", &VectorField::operator(), py::arg("x"))
      .def_property_readonly("domain", &VectorField::domain)
      .def_property_readonly("tag", &VectorField::tag)
      .def_property_readonly("has_jacobian", &VectorField::has_jacobian)
      .def("jacobian", &VectorField::jacobian, py::arg("x"))
      .def_property_readonly("has_divergence", &VectorField::has_divergence)
      .def("divergence", &VectorField::divergence, py::arg("x"));
  m.def("combine", &combine, py::arg("fields"), py::arg("coeffs"),
        "linear combination sum_i coeffs[i] * fields[i]");
  m.def("mlp_field", &mlp_field, py::arg("domain"), py::arg("weights"),
        "random tanh network field (tangent-projected on manifolds)");
  m.def(
      "field_from_callable",
      [](const Domain& domain, const std::string& tag,
         VectorField::ValueFn value, VectorField::JacobianFn jac) {
        return projected_field(domain, tag, std::move(value), std::move(jac));
      },
      py::arg("domain"), py::arg("tag"), py::arg("value"),
      py::arg("jacobian") = nullptr,
      "wrap python callables as a field; on manifold domains values are "
      "tangent-projected");

  // ---- models ----
  py::class_<ModelSpec>(m, "ModelSpec")
      .def_readonly("param_dim", &ModelSpec::param_dim)
      .def_readonly("name", &ModelSpec::name)
      .def_readonly("domain", &ModelSpec::domain)
      .def_property_readonly("has_fisher", &ModelSpec::has_fisher)
      .def_property_readonly("has_sampler", &ModelSpec::has_sampler)
      .def(
          "log_unnorm",
          [](const ModelSpec& s, const Vector& theta, const Vector& x) {
            return s.log_unnorm(theta, x);
          },
          py::arg("theta"), py::arg("x"))
      .def(
          "grad_x_log",
          [](const ModelSpec& s, const Vector& theta, const Vector& x) {
            return s.grad_x_log(theta, x);
          },
          py::arg("theta"), py::arg("x"))
      .def(
          "mixed_score_field",
          [](const ModelSpec& s, const Vector& theta, int j) {
            return s.mixed_score_field(theta, j);
          },
          py::arg("theta"), py::arg("j"))
      .def(
          "fisher_score",
          [](const ModelSpec& s, const Vector& theta, int j, const Vector& x) {
            if (!s.has_fisher())
              throw MissingFisherScore("model has no closed-form score");
            return s.fisher_score(theta, j, x);
          },
          py::arg("theta"), py::arg("j"), py::arg("x"))
      .def(
          "weight",
          [](const ModelSpec& s, const Vector& x) { return s.weight(x); },
          py::arg("x"))
      .def(
          "sample",
          [](const ModelSpec& s, const Vector& theta, int n, RngStream rng) {
            return s.sample(theta, n, rng);
          },
          py::arg("theta"), py::arg("n"), py::arg("rng"))
      .def("__repr__",
           [](const ModelSpec& s) { return "ModelSpec(" + s.name + ")"; });
  m.def("generalized_normal", &generalized_normal, py::arg("beta"));
  m.def("generalized_gamma", &generalized_gamma, py::arg("beta"));
  m.def("multivariate_normal", &multivariate_normal, py::arg("mu0"),
        py::arg("sigma0"));
  m.def("ppi_model", &ppi_model, py::arg("beta"), py::arg("p"));
  m.def("matrix_bingham", &matrix_bingham, py::arg("p"), py::arg("k"));
  m.def("mvn_pack", &mvn_pack, py::arg("mu"), py::arg("sigma"));
  m.def(
      "mvn_unpack",
      [](const Vector& theta, int p) {
        Vector mu;
        Matrix sigma;
        mvn_unpack(theta, p, mu, sigma);
        return py::make_tuple(mu, sigma);
      },
      py::arg("theta"), py::arg("p"));
  m.def("ppi_pack", &ppi_pack, py::arg("a"), py::arg("mu"));
  m.def(
      "ppi_unpack",
      [](const Vector& theta, int p) {
        Matrix a;
        Vector mu;
        ppi_unpack(theta, p, a, mu);
        return py::make_tuple(a, mu);
      },
      py::arg("theta"), py::arg("p"));
  m.def("bingham_pack", &bingham_pack, py::arg("a"));
  m.def("bingham_unpack", &bingham_unpack, py::arg("theta"), py::arg("p"));
  m.def("gn_theta_star", &gn_theta_star, py::arg("beta"),
        "unit-variance parameter of the generalized normal family");

  // ---- stein ----
  py::class_<SteinEval>(m, "SteinEval")
      .def_readonly("value", &SteinEval::value)
      .def_readonly("divergence_part", &SteinEval::divergence_part)
      .def_readonly("score_part", &SteinEval::score_part)
      .def("__repr__", [](const SteinEval& e) {
        return "SteinEval(value=" + std::to_string(e.value) + ")";
      });
  m.def("apply_stein", &apply_stein, py::arg("model"), py::arg("theta"),
        py::arg("field"), py::arg("x"));
  m.def("stein_values", &stein_values, py::arg("model"), py::arg("theta"),
        py::arg("fields"), py::arg("points"),
        "matrix of Stein values, points by fields");
  m.def("manifold_divergence", &manifold_divergence, py::arg("domain"),
        py::arg("field"), py::arg("x"));

  // ---- moments ----
  py::class_<MomentMatrices>(m, "MomentMatrices")
      .def_readonly("f", &MomentMatrices::f)
      .def_readonly("g", &MomentMatrices::g)
      .def_readonly("s", &MomentMatrices::s)
      .def_readonly("t", &MomentMatrices::t)
      .def_readonly("u", &MomentMatrices::u);
  py::class_<MomentEstimate>(m, "MomentEstimate")
      .def_readonly("mm", &MomentEstimate::mm)
      .def_readonly("v", &MomentEstimate::v)
      .def_readonly("mixed", &MomentEstimate::mixed);
  m.def("estimate_moments", &estimate_moments, py::arg("model"),
        py::arg("theta0"), py::arg("raw_fields"), py::arg("m"),
        py::arg("rng"));
  m.def("improved_fields", &improved_fields, py::arg("moments"));
  m.def("are_estimate", &are_estimate, py::arg("mm"),
        "per-parameter efficiency estimate from the moment matrices");

  // ---- estimators ----
  py::class_<EstimateRecord>(m, "EstimateRecord")
      .def_readonly("estimator", &EstimateRecord::estimator)
      .def_readonly("theta_hat", &EstimateRecord::theta_hat)
      .def_readonly("condition", &EstimateRecord::condition)
      .def_readonly("k_used", &EstimateRecord::k_used)
      .def_readonly("iterations", &EstimateRecord::iterations)
      .def_readonly("fell_back", &EstimateRecord::fell_back)
      .def_readonly("are", &EstimateRecord::are)
      .def("__repr__", [](const EstimateRecord& r) {
        std::string s = "EstimateRecord(" + r.estimator + ", theta_hat=[";
        for (int i = 0; i < r.theta_hat.size(); ++i)
          s += (i ? ", " : "") + std::to_string(r.theta_hat(i));
        return s + "])";
      });
  m.def("score_matching", &score_matching, py::arg("model"), py::arg("data"));
  m.def("smom_expfam", &smom_expfam, py::arg("model"), py::arg("fields"),
        py::arg("data"));
  m.def("gn_mle", &gn_mle, py::arg("beta"), py::arg("data"));
  m.def("gn_sm", &gn_sm, py::arg("beta"), py::arg("data"));
  m.def("gn_smom", &gn_smom, py::arg("beta"), py::arg("field"),
        py::arg("data"));
  m.def("improved_estimator", &improved_estimator, py::arg("model"),
        py::arg("data"), py::arg("theta0"), py::arg("raw_fields"),
        py::arg("m"), py::arg("rng"),
        "orthogonalized-field estimator; theta0=None uses the score-matching "
        "plug-in");
  m.def("newton_smom", &newton_smom, py::arg("model"), py::arg("fields_fn"),
        py::arg("data"), py::arg("theta_init"));

  // ---- wasserstein ----
  py::class_<WScore>(m, "WScore")
      .def_readonly("family", &WScore::family)
      .def_readonly("d", &WScore::d)
      .def(
          "eval",
          [](const WScore& w, const Vector& theta, int j, const Vector& x) {
            return w.eval(theta, j, x);
          },
          py::arg("theta"), py::arg("j"), py::arg("x"))
      .def(
          "grad",
          [](const WScore& w, const Vector& theta, int j, const Vector& x) {
            return w.grad(theta, j, x);
          },
          py::arg("theta"), py::arg("j"), py::arg("x"))
      .def(
          "grad_field",
          [](const WScore& w, const Vector& theta, int j) {
            return w.grad_field(theta, j);
          },
          py::arg("theta"), py::arg("j"));
  m.def("wscore_normal", &wscore_normal, py::arg("mu0"), py::arg("sigma0"));
  m.def("wscore_gn", &wscore_gn, py::arg("beta"));
  m.def("wscore_gg", &wscore_gg, py::arg("beta"));
  m.def("pde_residual", &pde_residual, py::arg("model"), py::arg("theta"),
        py::arg("wscore"), py::arg("j"), py::arg("x"));
  m.def("are_closed_form", &are_closed_form, py::arg("beta"));
  py::class_<SpanTest>(m, "SpanTest")
      .def_readonly("residual", &SpanTest::residual)
      .def_readonly("coefficients", &SpanTest::lambda);
  m.def("efficiency_span_test", &efficiency_span_test, py::arg("model"),
        py::arg("theta"), py::arg("wscore"), py::arg("m"), py::arg("rng"));
  py::class_<GapEstimate>(m, "GapEstimate")
      .def_readonly("gap", &GapEstimate::gap)
      .def_readonly("inner", &GapEstimate::inner)
      .def_readonly("inner_se", &GapEstimate::inner_se)
      .def_readonly("f_hat", &GapEstimate::f_hat)
      .def_readonly("g_hat", &GapEstimate::g_hat);
  m.def("mle_sm_gap", &mle_sm_gap, py::arg("model"), py::arg("theta"),
        py::arg("wscore"), py::arg("m"), py::arg("rng"));

  // ---- experiments ----
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("experiment", &ExperimentConfig::experiment)
      .def_readwrite("n_list", &ExperimentConfig::n_list)
      .def_readwrite("k_list", &ExperimentConfig::k_list)
      .def_readwrite("reps", &ExperimentConfig::reps)
      .def_readwrite("pairs", &ExperimentConfig::pairs)
      .def_readwrite("mc", &ExperimentConfig::mc)
      .def_readwrite("beta", &ExperimentConfig::beta)
      .def_readwrite("master_seed", &ExperimentConfig::master_seed)
      .def_readwrite("out", &ExperimentConfig::out)
      .def_readwrite("full", &ExperimentConfig::full);
  py::class_<ResultRow>(m, "ResultRow")
      .def_readonly("experiment", &ResultRow::experiment)
      .def_readonly("parameter", &ResultRow::parameter)
      .def_readonly("n", &ResultRow::n)
      .def_readonly("k", &ResultRow::k)
      .def_readonly("pair", &ResultRow::pair)
      .def_readonly("estimator", &ResultRow::estimator)
      .def_readonly("mse", &ResultRow::mse)
      .def_readonly("ratio_vs_sm", &ResultRow::ratio_vs_sm)
      .def_readonly("are_estimate", &ResultRow::are_estimate)
      .def_readonly("failures", &ResultRow::failures)
      .def("__repr__", [](const ResultRow& r) {
        return "ResultRow(" + r.experiment + " " + r.parameter +
               " n=" + std::to_string(r.n) + " K=" + std::to_string(r.k) +
               " " + r.estimator + ")";
      });
  m.def("run_gnormal", &run_gnormal, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_ppi", &run_ppi, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_bingham", &run_bingham, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("result_csv", &result_csv, py::arg("rows"));
  m.def("parse_result_csv", &parse_result_csv, py::arg("text"));
  m.def("summarize_csv", &summarize_csv, py::arg("rows"));
  m.def("are_curve_csv", &are_curve_csv, py::arg("beta_max"));
  m.def("testfunction_trace_csv", &testfunction_trace_csv, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
}
