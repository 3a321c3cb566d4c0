import math

import numpy as np
import pytest

import smom


def test_closed_form_efficiency_curve():
    assert smom.are_closed_form(1) == 1.0
    assert smom.are_closed_form(2) == pytest.approx(0.6854198715666955, abs=1e-12)
    assert smom.are_closed_form(10_000) == pytest.approx(1.0 / 3.0, abs=0.01)
    values = [smom.are_closed_form(b) for b in range(1, 15)]
    assert all(a > b for a, b in zip(values, values[1:]))
    with pytest.raises(RuntimeError):
        smom.are_closed_form(0)


def test_linear_solvers():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 4))
    spd = a @ a.T + 4 * np.eye(4)
    b = rng.normal(size=4)
    x = smom.solve_spd(spd, b)
    assert np.allclose(spd @ x, b)
    rhs = rng.normal(size=(3, 3))
    rhs = rhs + rhs.T
    sigma = np.diag([1.0, 2.0, 3.0])
    y = smom.sylvester_solve(sigma, rhs)
    assert np.allclose(sigma @ y + y @ sigma, rhs)
    with pytest.raises(smom.NotSPD):
        smom.solve_spd(np.array([[1.0, 2.0], [2.0, 1.0]]), b[:2])


def test_domains():
    e = smom.euclidean(3)
    assert e.ambient_dim == 3 and e.intrinsic_dim == 3 and not e.is_manifold
    s = smom.sphere_orthant(3)
    assert s.ambient_dim == 3 and s.intrinsic_dim == 2 and s.is_manifold
    x = np.array([0.6, 0.8, 0.0])
    assert s.contains(x)
    z = np.array([1.0, -1.0, 2.0])
    v = smom.project_tangent(s, x, z)
    assert abs(float(x @ v)) < 1e-12
    basis = np.column_stack(smom.tangent_basis(s, x))
    assert basis.shape == (3, 2)
    assert np.allclose(basis.T @ basis, np.eye(2))
    assert np.allclose(x @ basis, 0.0)
    y = smom.retract(s, x, v, 0.05)
    assert np.linalg.norm(y) == pytest.approx(1.0, abs=1e-12)


def test_mlp_field_deterministic_with_fd_jacobian():
    dom = smom.euclidean(2)
    f = smom.mlp_field(dom, smom.RngStream(11, 4))
    g = smom.mlp_field(dom, smom.RngStream(11, 4))
    x = np.array([0.3, -0.7])
    assert np.array_equal(f(x), g(x))
    jac = f.jacobian(x)
    eps = 1e-6
    for j in range(2):
        step = np.zeros(2)
        step[j] = eps
        fd = (f(x + step) - f(x - step)) / (2 * eps)
        assert np.allclose(jac[:, j], fd, atol=1e-6)
    combo = smom.combine([f, g], np.array([2.0, -1.0]))
    assert np.allclose(combo(x), f(x))


def test_field_from_callable():
    dom = smom.euclidean(1)
    f = smom.field_from_callable(dom, "cube", lambda x: -4.0 * x**3,
                                 lambda x: np.array([[-12.0 * x[0] ** 2]]))
    assert f(np.array([0.5]))[0] == pytest.approx(-0.5)
    assert f.divergence(np.array([0.5])) == pytest.approx(-3.0)


def test_generalized_normal_estimators():
    gn = smom.generalized_normal(2)
    theta_star = smom.gn_theta_star(2)
    data = gn.sample([theta_star], 4000, smom.RngStream(21, 0))
    sm = smom.score_matching(gn, data)
    mle = smom.gn_mle(2, data)
    assert sm.theta_hat[0] == pytest.approx(theta_star, rel=0.15)
    assert mle.theta_hat[0] == pytest.approx(theta_star, rel=0.15)
    assert np.allclose(smom.gn_sm(2, data).theta_hat, sm.theta_hat)
    fields = [gn.mixed_score_field([theta_star], 0)]
    assert np.array_equal(smom.smom_expfam(gn, fields, data).theta_hat,
                          sm.theta_hat)


def test_improved_estimator_reports_efficiency():
    gn = smom.generalized_normal(2)
    theta_star = smom.gn_theta_star(2)
    data = gn.sample([theta_star], 800, smom.RngStream(33, 1))
    raw = [smom.mlp_field(gn.domain, smom.RngStream(33, 100 + i))
           for i in range(4)]
    rec = smom.improved_estimator(gn, data, None, raw, 1000,
                                  smom.RngStream(33, 2))
    assert rec.estimator == "improved_plugin"
    assert not rec.fell_back
    assert rec.theta_hat[0] > 0
    assert 0.0 < rec.are[0] <= 1.0
    oracle = smom.improved_estimator(gn, data, [theta_star], raw, 1000,
                                     smom.RngStream(33, 2))
    assert oracle.estimator == "improved"


def test_stein_identity_monte_carlo():
    gn = smom.generalized_normal(2)
    theta = [smom.gn_theta_star(2)]
    f = smom.mlp_field(gn.domain, smom.RngStream(5, 9))
    pts = gn.sample(theta, 4000, smom.RngStream(5, 10))
    vals = smom.stein_values(gn, theta, [f], pts)
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(len(pts)))
    assert abs(mean) <= 4 * se
    ev = smom.apply_stein(gn, theta, f, pts[0])
    assert ev.value == pytest.approx(ev.divergence_part + ev.score_part)


def test_wasserstein_scores():
    gn = smom.generalized_normal(2)
    theta = [smom.gn_theta_star(2)]
    ws = smom.wscore_gn(2)
    for x in (0.3, -1.2, 2.0):
        assert abs(smom.pde_residual(gn, theta, ws, 0, [x])) < 1e-8
    mvn = smom.multivariate_normal(np.zeros(2), np.eye(2))
    ws_n = smom.wscore_normal(np.zeros(2), np.eye(2))
    theta_n = smom.mvn_pack(np.zeros(2), np.eye(2))
    span = smom.efficiency_span_test(mvn, theta_n, ws_n, 400,
                                     smom.RngStream(8, 0))
    assert span.residual < 1e-6
    assert span.coefficients.shape[0] == mvn.param_dim
    gap = smom.mle_sm_gap(gn, theta, ws, 20_000, smom.RngStream(8, 1))
    assert gap.gap.shape == (1, 1)
    assert gap.gap[0, 0] > 0


def test_experiment_rows_and_csv_round_trip():
    cfg = smom.ExperimentConfig()
    cfg.experiment = "gnormal"
    cfg.n_list = [40]
    cfg.k_list = [1]
    cfg.reps = 4
    cfg.pairs = 2
    cfg.mc = 150
    cfg.master_seed = 19
    rows = smom.run_gnormal(cfg)
    estimators = {(r.estimator, r.pair) for r in rows}
    assert ("sm", -1) in estimators and ("mle", -1) in estimators
    assert ("improved_oracle", 0) in estimators
    assert ("improved_plugin", 1) in estimators
    csv = smom.result_csv(rows)
    assert csv.splitlines()[0] == (
        "experiment,parameter,n,K,pair,estimator,mse,ratio_vs_sm,"
        "are_estimate,failures")
    again = smom.result_csv(smom.run_gnormal(cfg))
    assert csv == again
    parsed = smom.parse_result_csv(csv)
    assert smom.result_csv(parsed) == csv
    summary = smom.summarize_csv(rows)
    assert summary.splitlines()[0].startswith("experiment,")


def test_packing_round_trips():
    rng = np.random.default_rng(14)
    a = rng.normal(size=(3, 3))
    a = (a + a.T) / 2
    a[2, 2] = 0.0
    mu = np.array([0.4, -0.2, 0.0])
    theta = smom.ppi_pack(a, mu)
    a2, mu2 = smom.ppi_unpack(theta, 3)
    assert np.allclose(a2[:2, :2], a[:2, :2]) and np.allclose(mu2[:2], mu[:2])
    b = rng.normal(size=(3, 3))
    b = (b + b.T) / 2
    b[2, 2] = 0.0
    tb = smom.bingham_pack(b)
    assert np.allclose(smom.bingham_unpack(tb, 3), b)
    sig = np.array([[2.0, 0.3], [0.3, 1.0]])
    m2, s2 = smom.mvn_unpack(smom.mvn_pack(mu[:2], sig), 2)
    assert np.allclose(m2, mu[:2]) and np.allclose(s2, sig)
