import math

import numpy as np
import pytest

import rbflow.spectral as spectral
from rbflow.errors import NumericalError, UnsupportedFamilyError
from rbflow.families import FamilyKind, FamilySpec, geometry_for, init_state
from rbflow.spectral import (
    ClosedFormOperators,
    build_operators,
    continuity_ratio_check,
    first_nonzero_eigenpair,
    forced_matrix_lambda1,
    lowest_eigenpair,
    rayleigh_quotient,
    smallest_laplace_eigenvalues,
)

FOUR_PI_SQ = 4.0 * math.pi ** 2


def torus_state(resolution=64, **kw):
    return init_state(FamilySpec(kind=FamilyKind.CONFORMAL_TORUS, n=2,
                                 resolution=resolution, **kw))


def sphere_state(resolution=4, **kw):
    return init_state(FamilySpec(kind=FamilyKind.CONFORMAL_SPHERE, n=2,
                                 resolution=resolution, **kw))


def einstein_state(n=3, s0=1.0):
    return init_state(FamilySpec(kind=FamilyKind.EINSTEIN_SPHERE, n=n, s0=s0))


def test_flat_torus_first_eigenvalue():
    sr = first_nonzero_eigenpair(torus_state())
    n_grid = 64
    discrete = 2.0 * (1.0 - math.cos(2.0 * math.pi / n_grid)) * n_grid ** 2
    assert sr.value == pytest.approx(discrete, rel=1e-9)
    assert sr.value == pytest.approx(FOUR_PI_SQ, rel=0.01)


def test_result_constraints_hold():
    state = torus_state(preset="cos_x", amplitude=0.1)
    sr = first_nonzero_eigenpair(state)
    geom = geometry_for(state.family)
    mass_g = geom.mass * np.exp(2 * state.u)
    assert sr.residual <= 1e-9
    assert abs(float(np.sum(sr.f * sr.f * mass_g)) - 1.0) <= 1e-10
    assert abs(float(np.sum(sr.f * mass_g))) <= 1e-9


def test_sphere_eigenvalue_converges_with_level():
    errors = []
    for level in (2, 3, 4):
        sr = first_nonzero_eigenpair(sphere_state(level))
        errors.append(abs(sr.value - 2.0))
    assert errors[1] <= errors[0] / 2
    assert errors[2] <= errors[1] / 2
    assert errors[2] <= 0.01 * 2.0


def test_lowest_eigenpair_einstein_closed_form():
    ops = build_operators(einstein_state(), c=0.75)
    assert isinstance(ops, ClosedFormOperators)
    sr = lowest_eigenpair(ops)
    assert sr.value == pytest.approx(4.5, rel=1e-14)
    assert sr.residual == 0.0
    assert ops.laplace_eigenvalue(0) == 0.0
    assert ops.laplace_eigenvalue(1) == pytest.approx(3.0, rel=1e-14)
    assert ops.laplace_eigenvalue(2) == pytest.approx(8.0, rel=1e-14)


def test_first_nonzero_einstein_closed_form():
    sr = first_nonzero_eigenpair(einstein_state(n=3, s0=0.5))
    assert sr.value == pytest.approx(6.0, rel=1e-14)
    assert sr.residual == 0.0


def test_lowest_eigenpair_flat_torus_is_zero_mode():
    sr = lowest_eigenpair(build_operators(torus_state(), c=0.0))
    assert abs(sr.value) <= 1e-9
    assert np.std(sr.f) <= 1e-6 * abs(np.mean(sr.f))


def test_lowest_eigenpair_unit_icosphere_with_coupling():
    sr = lowest_eigenpair(build_operators(sphere_state(4), c=0.5))
    assert sr.value == pytest.approx(1.0, rel=0.01)
    assert np.all(sr.f > 0)


def test_potential_diagonal():
    ops = build_operators(sphere_state(3), c=0.5)
    # c R = 1 up to angle-defect noise, largest at the twelve base vertices
    assert np.max(np.abs(ops.potential / ops.mass - 1.0)) <= 0.15
    assert np.median(np.abs(ops.potential / ops.mass - 1.0)) <= 0.01
    ops0 = build_operators(sphere_state(3), c=0.0)
    assert np.all(ops0.potential == 0.0)


def test_rayleigh_quotient_consistency():
    ops = build_operators(torus_state(preset="cos_x", amplitude=0.1), c=0.5)
    sr = lowest_eigenpair(ops)
    assert rayleigh_quotient(ops, sr.f) == pytest.approx(sr.value, abs=1e-9)
    const = np.ones(ops.mass.shape[0])
    ops_c0 = build_operators(torus_state(preset="cos_x", amplitude=0.1), c=0.0)
    assert abs(rayleigh_quotient(ops_c0, const)) <= 1e-12
    cf = build_operators(einstein_state(n=2), c=0.3)
    assert rayleigh_quotient(cf, np.array([0.7])) == pytest.approx(0.6, rel=1e-14)
    with pytest.raises(ValueError):
        rayleigh_quotient(ops, np.zeros(ops.mass.shape[0]))


def test_uniform_scaling_law_exact():
    kappa = 1.7
    base = torus_state(preset="cos_x", amplitude=0.1)
    scaled = init_state(FamilySpec(kind=FamilyKind.CONFORMAL_TORUS, n=2, resolution=64,
                                   preset="cos_x", amplitude=0.1))
    scaled = scaled.with_dof(scaled.u + math.log(kappa) / 2.0, 0.0)
    lam_base = first_nonzero_eigenpair(base).value
    lam_scaled = first_nonzero_eigenpair(scaled).value
    assert lam_scaled == pytest.approx(lam_base / kappa, rel=1e-10)


def test_discrete_green_identity():
    for state in (torus_state(32), sphere_state(3)):
        geom = geometry_for(state.family)
        s = geom.stiffness
        assert (s != s.T).nnz == 0
        rng = np.random.default_rng(2)
        f = rng.standard_normal(geom.num_vertices)
        h = rng.standard_normal(geom.num_vertices)
        lhs = f @ (s @ h)
        rhs = h @ (s @ f)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_lambda0_concave_nondecreasing_in_c():
    state = sphere_state(3)
    values = [lowest_eigenpair(build_operators(state, c)).value for c in (0.0, 0.5, 1.0)]
    assert values[0] <= values[1] <= values[2]
    assert values[1] >= 0.5 * (values[0] + values[2]) - 1e-10


def test_continuity_uniform_scaling():
    eps = 0.2
    base = torus_state()
    shifted = base.with_dof(base.u + math.log1p(eps) / 2.0, 0.0)
    audit = continuity_ratio_check(base, shifted, eps)
    assert audit.hypothesis_met
    assert audit.lambda1_ratio == pytest.approx(1.2, rel=1e-10)
    assert audit.lambda1_ok


def test_continuity_identity_metrics():
    base = torus_state()
    audit = continuity_ratio_check(base, base, 0.0)
    assert audit.lambda1_ratio == pytest.approx(1.0, rel=1e-12)
    assert audit.lambda1_ok


def test_continuity_precondition_not_met_reported():
    base = torus_state()
    far = base.with_dof(base.u + 1.0, 0.0)
    audit = continuity_ratio_check(base, far, 0.1)
    assert not audit.hypothesis_met


def test_forced_matrix_route_matches_closed_form():
    scale = 1.3
    lam = forced_matrix_lambda1(scale, subdivision=4)
    assert lam == pytest.approx(2.0 / scale, rel=0.01)


def test_su2_unsupported():
    state = init_state(FamilySpec(kind=FamilyKind.SU2, n=3))
    with pytest.raises(UnsupportedFamilyError):
        build_operators(state, c=0.0)
    with pytest.raises(UnsupportedFamilyError):
        first_nonzero_eigenpair(state)


def test_multiplicity_probe_unit_sphere():
    vals = smallest_laplace_eigenvalues(sphere_state(3), k=5)
    assert np.all(np.abs(vals[1:4] / 2.0 - 1.0) <= 0.02)
    assert abs(vals[4] / 2.0 - 1.0) > 0.02


def test_solver_failure_raises_numerical_error(monkeypatch):
    def no_convergence(*_args, **_kwargs):
        raise spectral.spla.ArpackNoConvergence("iteration cap", np.array([]), np.array([[]]))

    monkeypatch.setattr(spectral.spla, "eigsh", no_convergence)
    with pytest.raises(NumericalError):
        first_nonzero_eigenpair(torus_state())
