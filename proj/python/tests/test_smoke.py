"""Smoke tests for the python bindings."""

import math

import bblab


def test_version_and_names():
    assert bblab.__version__
    assert "keller_osserman" in bblab.check_names()


def test_geometry_roundtrip():
    iv = bblab.Domain.interval(0.0, 1.0)
    assert iv.contains([0.5]) == "interior"
    assert iv.contains([0.0]) == "boundary"
    assert iv.distance_to_boundary([0.3]) == 0.3
    assert iv.project_to_boundary([0.3]) == [0.0]

    ball = bblab.Domain.ball([0.0, 0.0], 1.0)
    assert ball.signed_distance([2.0, 0.0]) == -1.0

    bd = bblab.BoundaryData.interval_ends(iv, bblab.INF, 1.0)
    assert bd.value_at(iv, [0.0]) == bblab.INF
    assert bd.distance_to_blowup(iv, [1.0]) == 1.0


def test_closed_forms():
    assert bblab.ode_flow_alpha(1.0, bblab.INF, 1.0, 0.0) == 1.0
    assert bblab.keller_osserman_constant_ball(1.0, 1) == 16.0
    assert bblab.keller_osserman_constant_ball(2.0, 1) == math.sqrt(6.0)
    assert bblab.majorant_value(16.0, 1.0, 0.0, 0.5) == 64.0
    assert bblab.halfline_blowup_coefficient(2.0, 1.0) == 1.0

    gen = bblab.GeneratorSpec.power(1.0, 2.0)
    assert bblab.f_transform(gen, 1.0) == 0.5
    assert abs(bblab.general_flow(gen, 2.0, 1.0) - 0.4) < 1e-12
    assert abs(bblab.implicit_step(bblab.GeneratorSpec.power(1.0), 0.5, 1.5) - 1.0) < 1e-10


def test_simulation_determinism():
    iv = bblab.Domain.interval(0.0, 1.0)
    f = bblab.CoefficientField.brownian(1)
    b1 = bblab.simulate_batch(f, iv, [0.5], 1e-2, 7, 200, threads=1)
    b2 = bblab.simulate_batch(f, iv, [0.5], 1e-2, 7, 200, threads=3)
    assert b1.tau_hat == b2.tau_hat
    est = bblab.estimate_mean_exit_time(b1)
    assert est.sample_count == 200
    assert 0.05 < est.mean < 0.6


def test_coefficient_report():
    iv = bblab.Domain.interval(0.0, 1.0)
    f = bblab.CoefficientField.brownian(1)
    f.declare_exact(iv)
    rep = bblab.check_coefficients(f, iv, 16)
    assert rep["verdict"] == "pass"

    deg = bblab.CoefficientField.constant_drift([1.0], 0.0)
    deg.declare_exact(iv)
    assert bblab.check_coefficients(deg, iv, 16)["verdict"] == "fail"


def test_pde_linear_sanity():
    iv = bblab.Domain.interval(0.0, 1.0)
    f = bblab.CoefficientField.brownian(1)
    f.declare_exact(iv)
    out = bblab.solve_pde(iv, f, bblab.GeneratorSpec.power(1.0, 0.0),
                          bblab.BoundaryData.interval_ends(iv, 0.0, 1.0), [32], 2.0)
    u = out["u"]
    assert all(abs(u[k] - k / 32.0) < 1e-10 for k in range(33))


def test_bsde_ode_mode():
    cfg = bblab.BsdeRunConfig.ode(bblab.GeneratorSpec.power(1.0), 2.0, 1.0, 1e-3)
    run = bblab.solve_regression(cfg)
    assert abs(run.y0_mean - 2.0 / 3.0) < 0.01
    assert run.y0_stderr == 0.0


def test_run_check_dict():
    rep = bblab.run_check("degenerate_sigma")
    assert rep["verdict"] == "pass"
    assert abs(rep["measured"]["band_x0.99"]["value"] - 0.01) < 1e-9
