"""Time integration of the curvature flow dg/dt = -2 (Ric - rho R g).

The degrees of freedom reduce per family: a linear scale ODE for round
spheres, a three-component ODE in the Milnor frame for SU(2), and a
stiff method-of-lines system for the conformal exponent in 2-D, where
du/dt = -(1 - 2 rho) R / 2.

Classical RK4 throughout, with an optional CFL-limited step on the PDE
families, rejection-halving near blow-up, and a curvature-magnitude
threshold standing in for the analytic maximal time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import CurvatureReport, curvature_report
from .errors import ConfigurationError, NumericalError
from .families import (
    CONFORMAL_KINDS,
    FamilyKind,
    FamilySpec,
    MetricState,
    geometry_for,
    integrate_scalar,
    volume,
)

CFL_SAFETY = 0.5
DT_MIN = 1e-12
REL_STEP_CAP = 0.5  # largest relative dof change accepted in one step
_T_EPS = 1e-12


@dataclass(frozen=True)
class FlowParams:
    """Flow constants and stepping policy for one run."""

    rho: float
    c: float
    n: int
    dt_init: float = 1e-3
    dt_policy: str = "fixed"  # "fixed" | "cfl_adaptive"
    t_max: float = 1.0
    blowup_threshold: float = 1e6

    def __post_init__(self):
        errors = []
        if self.dt_init <= 0:
            errors.append(f"dt_init must be positive, got {self.dt_init}")
        if self.t_max <= 0:
            errors.append(f"t_max must be positive, got {self.t_max}")
        if self.blowup_threshold <= 0:
            errors.append(f"blowup_threshold must be positive, got {self.blowup_threshold}")
        if self.dt_policy not in ("fixed", "cfl_adaptive"):
            errors.append(f"unknown dt_policy {self.dt_policy!r}")
        if errors:
            raise ConfigurationError(errors)


def admissibility_limit(n: int) -> float:
    return 1.0 / (2.0 * (n - 1))


def validate_flow_params(params: FlowParams, spec: FamilySpec) -> None:
    """Check rho against the short-time existence bound for the family.

    PDE families need the strict inequality; the closed-form ODE families
    stay integrable at the boundary value, so equality is allowed there.
    """
    errors = []
    if params.n != spec.n:
        errors.append(f"params.n = {params.n} does not match family n = {spec.n}")
    limit = admissibility_limit(spec.n)
    if spec.kind in CONFORMAL_KINDS:
        if not params.rho < limit:
            errors.append(
                f"rho must be < 1/(2(n-1)) = {limit} for PDE families, got {params.rho}")
    else:
        if not params.rho <= limit:
            errors.append(
                f"rho must be <= 1/(2(n-1)) = {limit}, got {params.rho}")
        if params.dt_policy == "cfl_adaptive":
            errors.append("cfl_adaptive stepping applies only to the conformal families")
    if errors:
        raise ConfigurationError(errors)


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    state: MetricState
    report: CurvatureReport


@dataclass
class Trajectory:
    """Ordered flow samples plus how and when the run stopped."""

    family: FamilySpec
    params: FlowParams
    samples: list[TrajectorySample] = field(default_factory=list)
    stop_reason: str = "horizon"  # "horizon" | "blowup" | "step_underflow"

    @property
    def t_stop(self) -> float:
        return self.samples[-1].t

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])


def _raw_rhs(dof: np.ndarray, spec: FamilySpec, rho: float) -> np.ndarray:
    # Works directly on dof arrays so RK4 stages that leave the valid cone
    # propagate inf/nan (caught by the step validity check) instead of raising.
    kind = spec.kind
    if kind is FamilyKind.EINSTEIN_SPHERE:
        n = spec.n
        return np.array([-2.0 * (n - 1) * (1.0 - n * rho)])
    if kind is FamilyKind.SU2:
        a, b, c = dof
        ra = 2.0 * (a * a - (b - c) ** 2) / (b * c)
        rb = 2.0 * (b * b - (c - a) ** 2) / (c * a)
        rc = 2.0 * (c * c - (a - b) ** 2) / (a * b)
        r = ra / a + rb / b + rc / c
        return np.array([
            -2.0 * ra + 2.0 * rho * r * a,
            -2.0 * rb + 2.0 * rho * r * b,
            -2.0 * rc + 2.0 * rho * r * c,
        ])
    geom = geometry_for(spec)
    r = np.exp(-2.0 * dof) * (geom.base_curvature + 2.0 * (geom.stiffness @ dof) / geom.mass)
    return -(1.0 - 2.0 * rho) / 2.0 * r


def rb_rhs(state: MetricState, rho: float) -> np.ndarray:
    """Time derivative of the dof vector under the flow."""
    return _raw_rhs(state.dof, state.family, rho)


def rk4_step(y: np.ndarray, dt: float, f) -> np.ndarray:
    """One classical RK4 step of y' = f(y)."""
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _step_acceptable(old: np.ndarray, new: np.ndarray, kind: FamilyKind) -> bool:
    """Validity plus an accuracy guard near collapse.

    Steps that change a positive dof by more than REL_STEP_CAP relative
    (or the conformal exponent by that much absolutely) are rejected and
    retried smaller, so trajectories stay accurate into a blow-up.
    """
    if not np.all(np.isfinite(new)):
        return False
    if kind in (FamilyKind.EINSTEIN_SPHERE, FamilyKind.SU2):
        if not np.all(new > 0):
            return False
        return bool(np.max(np.abs(new - old) / old) <= REL_STEP_CAP)
    if np.max(np.abs(new)) >= 300.0:  # keep e^{2u} representable
        return False
    return bool(np.max(np.abs(new - old)) <= REL_STEP_CAP)


def cfl_dt(state: MetricState, rho: float) -> float:
    """Stable explicit step for the conformal heat operator.

    Uses the Gershgorin bound on mass^{-1} stiffness; on the uniform
    torus grid this reduces to safety * h^2 * min(e^{2u}) / (4 (1-2 rho)).
    """
    geom = geometry_for(state.family)
    return CFL_SAFETY * 2.0 * math.exp(2.0 * float(np.min(state.u))) / (
        (1.0 - 2.0 * rho) * geom.gersh)


def integrate(state0: MetricState, params: FlowParams, sample_every: int = 1) -> Trajectory:
    """Run the flow to the horizon, blow-up, or step underflow.

    Samples every ``sample_every`` accepted steps (the initial and final
    states are always sampled). A step is rejected and retried at half
    size when it produces an invalid dof vector; blow-up is declared when
    the curvature magnitude proxy exceeds the configured threshold.
    """
    validate_flow_params(params, state0.family)
    if sample_every < 1:
        raise ConfigurationError(f"sample_every must be >= 1, got {sample_every}")
    kind = state0.family.kind
    report = curvature_report(state0)
    traj = Trajectory(state0.family, params, [TrajectorySample(0.0, state0, report)])
    if report.riem_mag > params.blowup_threshold:
        traj.stop_reason = "blowup"
        return traj

    adaptive = params.dt_policy == "cfl_adaptive"
    t = 0.0
    state = state0
    dt_cap = params.dt_init
    since_sample = 0
    horizon = params.t_max
    eps = _T_EPS * max(1.0, horizon)
    rho = params.rho
    spec = state0.family
    while t < horizon - eps:
        dt = min(dt_cap, cfl_dt(state, rho)) if adaptive else dt_cap
        dt = min(dt, horizon - t)
        with np.errstate(all="ignore"):
            new_dof = rk4_step(state.dof, dt, lambda y: _raw_rhs(y, spec, rho))
        if not _step_acceptable(state.dof, new_dof, kind):
            dt_cap = dt / 2.0
            if dt_cap < DT_MIN:
                traj.stop_reason = "step_underflow"
                break
            continue
        t += dt
        state = state.with_dof(new_dof, t)
        if adaptive:
            dt_cap = min(dt_cap * 2.0, 1e300)
        report = curvature_report(state)
        since_sample += 1
        if report.riem_mag > params.blowup_threshold:
            traj.samples.append(TrajectorySample(t, state, report))
            traj.stop_reason = "blowup"
            return traj
        if since_sample >= sample_every or t >= horizon - eps:
            traj.samples.append(TrajectorySample(t, state, report))
            since_sample = 0
    if traj.samples[-1].t < t - eps:
        traj.samples.append(TrajectorySample(t, state, curvature_report(state)))
    return traj


def advance(state: MetricState, params: FlowParams, duration: float) -> MetricState:
    """Integrate a state forward (or backward) by a fixed duration.

    Used by finite-difference eigenvalue derivatives; raises on blow-up
    or underflow inside the window instead of returning a trajectory.
    """
    if duration == 0.0:
        return state
    kind = state.family.kind
    sign = 1.0 if duration > 0 else -1.0
    remaining = abs(duration)
    adaptive = params.dt_policy == "cfl_adaptive"
    dt_cap = params.dt_init
    rho = params.rho
    t = state.t
    spec = state.family
    while remaining > _T_EPS * max(1.0, abs(duration)):
        dt = min(dt_cap, cfl_dt(state, rho)) if adaptive else dt_cap
        dt = min(dt, remaining)
        with np.errstate(all="ignore"):
            new_dof = rk4_step(state.dof, sign * dt, lambda y: _raw_rhs(y, spec, rho))
        if not _step_acceptable(state.dof, new_dof, kind):
            dt_cap = dt / 2.0
            if dt_cap < DT_MIN:
                raise NumericalError(
                    f"step underflow while advancing from t = {state.t}")
            continue
        remaining -= dt
        t += sign * dt
        state = state.with_dof(new_dof, t)
        if adaptive:
            dt_cap = min(dt_cap * 2.0, 1e300)
    return state


def sigma_bound(eps: float, rho: float, t: float) -> float:
    """Comparison solution of d(sigma)/dt = 2 (1 - rho) sigma^2.

    ``eps`` is the initial maximum of the scalar curvature; the solution
    has a pole at t = 1 / (2 (1 - rho) eps) and dominates max R up to it.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if rho >= 1:
        raise ValueError(f"rho must be < 1, got {rho}")
    pole = 1.0 / (2.0 * (1.0 - rho) * eps)
    if t < 0 or t >= pole:
        raise ValueError(f"t = {t} outside the comparison interval [0, {pole})")
    return 1.0 / (1.0 / eps - 2.0 * (1.0 - rho) * t)


def _nonuniform_derivative(fm, f0, fp, h1: float, h2: float):
    """Second-order derivative at the middle of three unequally spaced samples."""
    return (h1 * h1 * fp + (h2 * h2 - h1 * h1) * f0 - h2 * h2 * fm) / (
        h1 * h2 * (h1 + h2))


def evolution_identity_residuals(traj: Trajectory, index: int) -> tuple[float, float]:
    """Residuals of the scalar-curvature and volume evolution identities.

    At an interior sample, compares centered time differences against
    dR/dt = (1 - 2(n-1) rho) Lap_g R + 2 |Ric|^2 - 2 rho R^2 (max norm)
    and dV/dt = (n rho - 1) * integral of R. Both vanish identically on
    static runs.
    """
    if index <= 0 or index >= len(traj.samples) - 1:
        raise ValueError(f"index {index} has no two neighbours for differencing")
    prev, cur, nxt = traj.samples[index - 1], traj.samples[index], traj.samples[index + 1]
    h1 = cur.t - prev.t
    h2 = nxt.t - cur.t
    n = traj.family.n
    rho = traj.params.rho

    r_prev = np.asarray(prev.report.R, dtype=float)
    r_cur = np.asarray(cur.report.R, dtype=float)
    r_next = np.asarray(nxt.report.R, dtype=float)
    drdt = _nonuniform_derivative(r_prev, r_cur, r_next, h1, h2)

    if traj.family.kind in CONFORMAL_KINDS:
        geom = geometry_for(traj.family)
        u = cur.state.u
        lap_r = -np.exp(-2.0 * u) * (geom.stiffness @ r_cur) / geom.mass
    else:
        lap_r = 0.0
    rhs = (1.0 - 2.0 * (n - 1) * rho) * lap_r \
        + 2.0 * np.asarray(cur.report.ric_norm_sq, dtype=float) \
        - 2.0 * rho * r_cur * r_cur
    r_scalar = float(np.max(np.abs(drdt - rhs)))

    dvdt = _nonuniform_derivative(
        volume(prev.state), volume(cur.state), volume(nxt.state), h1, h2)
    r_volume = abs(dvdt - (n * rho - 1.0) * integrate_scalar(cur.state, r_cur))
    return r_scalar, r_volume
