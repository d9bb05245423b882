import numpy as np
import pytest

from rbflow.errors import ConfigurationError, UnsupportedFamilyError
from rbflow.families import FamilyKind, FamilySpec, init_state
from rbflow.flow import FlowParams, integrate
from rbflow.monitor import (
    MonitorOptions,
    MonitorRecord,
    build_records,
    coefficient_A,
    coefficient_k,
    fd_eigen_derivative,
    flow_audits,
    hypothesis_check,
    lambda0_rate_expanded,
    lambda0_rate_square_form,
    lambda1_rate,
    monotonicity_audit,
    rescale_params,
    rescaled_quantity,
    square_coefficient,
)
from rbflow.spectral import build_operators, first_nonzero_eigenpair, lowest_eigenpair


def einstein_state(n=3, s0=1.0):
    return init_state(FamilySpec(kind=FamilyKind.EINSTEIN_SPHERE, n=n, s0=s0))


def torus_state(**kw):
    return init_state(FamilySpec(kind=FamilyKind.CONFORMAL_TORUS, n=2, resolution=64, **kw))


def params(n=3, rho=0.0, c=0.0, **kw):
    kw.setdefault("dt_init", 1e-3)
    kw.setdefault("t_max", 1.0)
    return FlowParams(rho=rho, c=c, n=n, **kw)


def test_rescale_params_values():
    rp = rescale_params(0.1, 0.75, 3, 6.0)
    assert rp.alpha == pytest.approx(1.0 / 9.0, abs=1e-12)
    assert rp.T_prime == pytest.approx(1.0 / 10.8, abs=1e-15)
    rp0 = rescale_params(0.0, 0.5, 3, 6.0)
    assert rp0.alpha == pytest.approx(0.0, abs=1e-15)
    assert rp0.T_prime == pytest.approx(1.0 / 12.0, abs=1e-15)
    with pytest.raises(ValueError):
        rescale_params(1.0, 0.5, 3, 6.0)
    with pytest.raises(ValueError):
        rescale_params(0.1, 0.5, 3, 0.0)


def test_rescaled_quantity_values():
    rp = rescale_params(0.1, 0.75, 3, 6.0)
    q0 = rescaled_quantity(4.5, 0.0, rp)
    assert q0 == pytest.approx(10.8 ** (1.0 / 9.0) * 4.5, rel=1e-12)
    assert q0 == pytest.approx(5.8652, rel=1e-3)
    rp0 = rescale_params(0.0, 0.5, 3, 6.0)
    assert rescaled_quantity(3.7, 0.02, rp0) == 3.7  # alpha = 0
    assert rescaled_quantity(0.0, 0.01, rp) == 0.0
    with pytest.raises(ValueError):
        rescaled_quantity(1.0, rp.T_prime, rp)


def test_coefficients_specialize_at_rho_zero():
    for c in (0.3, 0.5, 1.1):
        assert coefficient_A(0.0, c, 3) == pytest.approx(2 * c - 1, rel=1e-14)
    for n in (2, 3, 4):
        assert coefficient_k(0.0, n) == 1.0
        assert square_coefficient(0.0, n) == 0.5


def test_rate_values_on_round_spheres():
    run = params(n=2, rho=0.0, c=0.5)
    state = einstein_state(n=2)
    sr0 = lowest_eigenpair(build_operators(state, 0.5))
    assert lambda0_rate_expanded(state, sr0, run) == pytest.approx(2.0, rel=1e-12)
    assert lambda0_rate_square_form(state, sr0, run) == pytest.approx(2.0, rel=1e-12)
    sr1 = first_nonzero_eigenpair(state)
    assert lambda1_rate(state, sr1, run) == pytest.approx(4.0, rel=1e-12)

    run3 = params(n=3, rho=0.1, c=0.75)
    state3 = einstein_state()
    sr0 = lowest_eigenpair(build_operators(state3, 0.75))
    assert lambda0_rate_expanded(state3, sr0, run3) == pytest.approx(12.6, rel=1e-12)
    assert lambda0_rate_square_form(state3, sr0, run3) == pytest.approx(12.6, rel=1e-12)
    sr1 = first_nonzero_eigenpair(state3)
    assert lambda1_rate(state3, sr1, params(n=3, rho=0.0)) == pytest.approx(12.0, rel=1e-12)


def test_rate_identity_on_random_einstein_states():
    rng = np.random.default_rng(9)
    for _ in range(30):
        n = int(rng.integers(2, 5))
        s0 = float(np.exp(rng.uniform(-1, 1)))
        rho = float(rng.uniform(-0.8, 1.0 / (2 * (n - 1))))
        c = float(rng.uniform(-0.5, 1.5))
        state = einstein_state(n=n, s0=s0)
        run = params(n=n, rho=rho, c=c)
        sr0 = lowest_eigenpair(build_operators(state, c))
        lhs = lambda0_rate_expanded(state, sr0, run)
        rhs = lambda0_rate_square_form(state, sr0, run)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_rates_vanish_on_static_torus():
    state = torus_state(preset="zero")
    run = params(n=2, rho=0.0, c=0.8)
    sr0 = lowest_eigenpair(build_operators(state, 0.8))
    assert lambda0_rate_expanded(state, sr0, run) == 0.0
    # the completed-square form differentiates log f, so the numerically
    # constant eigenfunction leaves roundoff rather than a bitwise zero
    assert abs(lambda0_rate_square_form(state, sr0, run)) <= 1e-12
    sr1 = first_nonzero_eigenpair(state)
    assert lambda1_rate(state, sr1, run) == 0.0


def test_gradient_quadratures_match_reference_values():
    from rbflow.families import geometry_for
    from rbflow.monitor import _grid_weighted_grad_integral, _mesh_weighted_grad_integral

    geom = geometry_for(FamilySpec(kind=FamilyKind.CONFORMAL_SPHERE, n=2, resolution=3))
    rng = np.random.default_rng(1)
    f = rng.standard_normal(geom.num_vertices)
    lhs = _mesh_weighted_grad_integral(geom, np.ones(geom.num_vertices), f)
    rhs = float(f @ (geom.stiffness @ f))
    assert lhs == pytest.approx(rhs, rel=1e-12)  # P1 identity, face sums vs stiffness

    tg = geometry_for(FamilySpec(kind=FamilyKind.CONFORMAL_TORUS, n=2, resolution=64))
    fc = np.cos(2 * np.pi * tg.coords[:, 0])
    val = _grid_weighted_grad_integral(tg, np.ones(64 * 64), fc)
    assert val == pytest.approx(2 * np.pi**2, rel=0.01)


def test_fd_matches_rate_on_conformal_sphere():
    spec = FamilySpec(kind=FamilyKind.CONFORMAL_SPHERE, n=2, resolution=3,
                      preset="cos_x", amplitude=0.1)
    run = FlowParams(rho=0.1, c=0.5, n=2, dt_policy="cfl_adaptive", dt_init=1e-3, t_max=0.02)
    traj = integrate(init_state(spec), run, sample_every=5)
    mid = traj.samples[len(traj.samples) // 2]
    sr0 = lowest_eigenpair(build_operators(mid.state, 0.5))
    r31 = lambda0_rate_expanded(mid.state, sr0, run)
    fd0 = fd_eigen_derivative(traj, "lambda0", mid.t, h=1e-4)
    assert fd0 == pytest.approx(r31, rel=5e-2)


def test_square_form_unsupported_on_sphere_mesh():
    state = init_state(FamilySpec(kind=FamilyKind.CONFORMAL_SPHERE, n=2, resolution=3))
    run = params(n=2, rho=0.0, c=0.5)
    sr0 = lowest_eigenpair(build_operators(state, 0.5))
    with pytest.raises(UnsupportedFamilyError):
        lambda0_rate_square_form(state, sr0, run)


def test_fd_derivative_closed_form_paths():
    run3 = params(n=3, rho=0.1, c=0.75, t_max=0.05)
    traj = integrate(einstein_state(), run3, sample_every=5)
    fd0 = fd_eigen_derivative(traj, "lambda0", 0.0, h=1e-4)
    assert fd0 == pytest.approx(12.6, rel=0.01)

    run2 = params(n=2, rho=0.0, t_max=0.05)
    traj2 = integrate(einstein_state(n=2), run2, sample_every=5)
    fd1 = fd_eigen_derivative(traj2, "lambda1", 0.0, h=1e-4)
    assert fd1 == pytest.approx(4.0, rel=0.01)
    with pytest.raises(ValueError):
        fd_eigen_derivative(traj2, "lambda1", traj2.t_stop, h=1e-4)
    with pytest.raises(ValueError):
        fd_eigen_derivative(traj2, "nope", 0.0, h=1e-4)


def test_fd_derivative_static_torus_is_zero():
    run = params(n=2, c=0.5, dt_init=2e-5, dt_policy="fixed", t_max=2e-3)
    traj = integrate(torus_state(preset="zero"), run, sample_every=10)
    fd0 = fd_eigen_derivative(traj, "lambda0", traj.samples[5].t, h=2e-4)
    assert abs(fd0) <= 1e-8


def test_hypothesis_check_examples():
    state = einstein_state()
    assert not hypothesis_check(params(n=3, rho=0.3), state).admissible
    assert hypothesis_check(params(n=3, rho=0.0), state).admissible

    hyp1 = hypothesis_check(params(n=3, rho=-0.5, c=0.6), state)
    assert hyp1.lambda0_threshold == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert hyp1.lambda0_monotone

    hyp2 = hypothesis_check(params(n=3, rho=0.1, c=0.75), state)
    assert hyp2.rescaled_threshold == pytest.approx(0.75, rel=1e-12)
    assert hyp2.rescaled_monotone

    with pytest.raises(ConfigurationError):
        hypothesis_check(params(), state, a=-1.0)


def test_hypothesis_admissibility_boundary():
    state = einstein_state()
    assert not hypothesis_check(params(n=3, rho=0.25), state).admissible
    assert hypothesis_check(params(n=3, rho=0.2), state).admissible


def _synthetic_records(values):
    records = []
    for i, v in enumerate(values):
        records.append(MonitorRecord(
            t=0.01 * i, lambda0=v, lambda1=v, Q=v,
            R_min=1.0 + 0.1 * i, R_max=2.0 + 0.1 * i, pinch=0.3,
            flags={"deficit_ok": True}))
    return records


def _all_true_hyp(state, run):
    return hypothesis_check(run, state)


def test_monotonicity_audit_synthetic_series():
    run = params(n=3, rho=0.1, c=0.75)
    hyp = _all_true_hyp(einstein_state(), run)
    increasing = _synthetic_records([1.0, 2.0, 3.0, 4.0])
    verdicts = {v.name: v for v in monotonicity_audit(increasing, hyp)}
    assert verdicts["Q_monotone"].verdict == "pass"

    flat = _synthetic_records([1.0, 1.0, 1.0])
    verdicts = {v.name: v for v in monotonicity_audit(flat, hyp)}
    assert verdicts["Q_monotone"].verdict == "static"

    dipping = _synthetic_records([1.0, 2.0, 1.5])
    verdicts = {v.name: v for v in monotonicity_audit(dipping, hyp)}
    assert verdicts["Q_monotone"].verdict == "fail"

    with pytest.raises(ValueError):
        monotonicity_audit(_synthetic_records([1.0, 2.0]), hyp)


def test_audits_on_rescaled_run():
    run = params(n=3, rho=0.1, c=0.75, t_max=0.9 / 10.8)
    state = einstein_state()
    traj = integrate(state, run, sample_every=5)
    hyp = hypothesis_check(run, state)
    records = build_records(traj, MonitorOptions())
    verdicts = {v.name: v for v in monotonicity_audit(records, hyp, traj.stop_reason)}
    assert verdicts["Q_monotone"].verdict == "pass"
    assert verdicts["lambda0_monotone"].verdict == "hypothesis-not-met"


def test_audits_on_divergent_round_sphere():
    run = params(n=3, rho=0.0, blowup_threshold=1e6)
    state = einstein_state()
    traj = integrate(state, run, sample_every=10)
    hyp = hypothesis_check(run, state)
    records = build_records(traj, MonitorOptions())
    for rec in records:
        if rec.lambda1 is not None:
            assert rec.lambda1 == pytest.approx(0.5 * rec.R_min, rel=1e-12)
    verdicts = {v.name: v for v in monotonicity_audit(records, hyp, traj.stop_reason)}
    assert verdicts["lambda1_divergence"].verdict == "pass"
    flow_verdicts = {v.name: v for v in flow_audits(records, hyp, run, traj.t_stop, traj.stop_reason)}
    assert flow_verdicts["R_min_monotone"].verdict == "pass"
    assert flow_verdicts["sigma_comparison"].verdict == "pass"
    assert flow_verdicts["pinch_preserved"].verdict == "pass"
    assert flow_verdicts["blowup_time_bound"].verdict == "pass"
    assert flow_verdicts["rescale_horizon"].verdict == "pass"


def test_static_run_reports_static():
    run = params(n=2, rho=0.0, c=0.5, dt_init=2e-5, dt_policy="fixed", t_max=2e-4)
    traj = integrate(torus_state(preset="zero"), run, sample_every=1)
    hyp = hypothesis_check(run, traj.samples[0].state)
    records = build_records(traj, MonitorOptions(eigen_stride=5))
    verdicts = {v.name: v for v in monotonicity_audit(records, hyp, traj.stop_reason)}
    assert verdicts["max_R_exceeds_initial_min"].verdict == "static"


def test_records_layout_per_family():
    run = params(n=3, rho=0.0, t_max=0.01)
    su2 = init_state(FamilySpec(kind=FamilyKind.SU2, n=3, su2_abc=(1, 1, 0.8)))
    records = build_records(integrate(su2, run, 2), MonitorOptions())
    assert all(r.lambda0 is None and r.lambda1 is None for r in records)
    assert all(r.pinch is not None for r in records)

    run2 = params(n=2, rho=0.0, c=0.0, dt_init=2e-5, dt_policy="fixed", t_max=2e-4)
    records2 = build_records(integrate(torus_state(preset="zero"), run2, 1),
                             MonitorOptions(eigen_stride=4))
    assert all(r.lambda0 is None for r in records2)  # no coupling when c = 0
    assert any(r.lambda1 is not None for r in records2)
