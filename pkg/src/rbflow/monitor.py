"""Monotonicity and comparison monitors along a flow trajectory.

Evaluates hypothesis checks, the closed-form eigenvalue-derivative
expansions, finite-difference cross checks, the rescaled monotone
quantity, and renders per-audit verdicts over a sampled record series.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .curvature import CurvatureReport, conformal_scalar_curvature, curvature_report, pinching_deficit
from .errors import ConfigurationError, UnsupportedFamilyError
from .families import (
    CONFORMAL_KINDS,
    BaseGeometry,
    FamilyKind,
    MetricState,
    geometry_for,
    integrate_scalar,
)
from .flow import FlowParams, Trajectory, admissibility_limit, advance, sigma_bound
from .spectral import (
    SpectralResult,
    build_operators,
    first_nonzero_eigenpair,
    lowest_eigenpair,
)

STRICT_RTOL = 1e-10
DEFICIT_TOL = 1e-12
PINCH_TOL = 1e-8
R_MIN_TOL = 1e-8
SIGMA_SLACK = 1e-6
TIME_BOUND_SLACK = 1e-3


# ---------------------------------------------------------------------------
# rescaling


@dataclass(frozen=True)
class RescaleParams:
    """Constants of the rescaled monotone quantity (T' - t)^(-alpha) lambda0."""

    eps_max_R0: float
    T_prime: float
    alpha: float


def rescale_params(rho: float, c: float, n: int, r0_max: float) -> RescaleParams:
    if rho >= 1.0:
        raise ValueError(f"rho must be < 1, got {rho}")
    if r0_max <= 0.0:
        raise ValueError(f"initial max scalar curvature must be positive, got {r0_max}")
    alpha = (2.0 * c * (1.0 - 2.0 * (n - 1) * rho) + n * rho - 1.0) / (2.0 * (1.0 - rho))
    return RescaleParams(
        eps_max_R0=r0_max,
        T_prime=1.0 / (2.0 * (1.0 - rho) * r0_max),
        alpha=alpha,
    )


def rescaled_quantity(lambda0: float, t: float, rp: RescaleParams) -> float:
    if t < 0.0 or t >= rp.T_prime:
        raise ValueError(f"t = {t} outside [0, T' = {rp.T_prime})")
    return (rp.T_prime - t) ** (-rp.alpha) * lambda0


def coefficient_A(rho: float, c: float, n: int) -> float:
    """Coupling coefficient of the expanded lambda0 derivative."""
    return -1.0 + n * rho + 2.0 * c * (1.0 - 2.0 * (n - 1) * rho)


def coefficient_k(rho: float, n: int) -> float:
    """Hessian weight in the completed-square form of the derivative."""
    q = rho * (n - 1)
    return (1.0 - 2.0 * q) / (1.0 - q)


def square_coefficient(rho: float, n: int) -> float:
    """Coefficient of the completed-square term, 1 / (2 k (2 - k))."""
    q = rho * (n - 1)
    return (1.0 - q) ** 2 / (2.0 - 4.0 * q)


# ---------------------------------------------------------------------------
# quadratures for the curvature-weighted gradient integrals


def _grid_weighted_grad_integral(geom: BaseGeometry, weight: np.ndarray, f: np.ndarray) -> float:
    """Cell-averaged weight times |grad f|^2 on the periodic grid.

    Both this and its Ricci variant are evaluated against the flat base;
    in two dimensions the combination weight * |grad f|^2 dvol is
    conformally invariant, so no metric factors appear.
    """
    n = geom.grid_n
    h = 1.0 / n
    fg = f.reshape(n, n)
    wg = weight.reshape(n, n)
    f10 = np.roll(fg, -1, axis=0)
    f01 = np.roll(fg, -1, axis=1)
    f11 = np.roll(f10, -1, axis=1)
    fx = (f10 - fg + f11 - f01) / (2.0 * h)
    fy = (f01 - fg + f11 - f10) / (2.0 * h)
    wc = (wg + np.roll(wg, -1, axis=0) + np.roll(wg, -1, axis=1)
          + np.roll(np.roll(wg, -1, axis=0), -1, axis=1)) / 4.0
    return float(np.sum(wc * (fx * fx + fy * fy)) * h * h)


def _mesh_weighted_grad_integral(geom: BaseGeometry, weight: np.ndarray, f: np.ndarray) -> float:
    """Face-averaged weight times the P1 gradient square on the icosphere."""
    tri = geom.faces
    p = geom.coords[tri]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    df1 = f[tri[:, 1]] - f[tri[:, 0]]
    df2 = f[tri[:, 2]] - f[tri[:, 0]]
    g11 = (e1 * e1).sum(axis=1)
    g22 = (e2 * e2).sum(axis=1)
    g12 = (e1 * e2).sum(axis=1)
    det = g11 * g22 - g12 * g12
    area = 0.5 * np.sqrt(det)
    grad_sq = (g22 * df1 * df1 - 2.0 * g12 * df1 * df2 + g11 * df2 * df2) / det
    wf = weight[tri].mean(axis=1)
    return float(np.sum(wf * grad_sq * area))


def weighted_grad_integral(state: MetricState, weight: np.ndarray, f: np.ndarray) -> float:
    """Integral of weight * |grad f|^2 with respect to the state's metric."""
    geom = geometry_for(state.family)
    if geom.kind == "torus_grid":
        return _grid_weighted_grad_integral(geom, weight, f)
    return _mesh_weighted_grad_integral(geom, weight, f)


def _grid_square_term(
    geom: BaseGeometry, u: np.ndarray, r_field: np.ndarray, f: np.ndarray, k_coeff: float
) -> float:
    """Integral of |Ric - 2k Hess_g(log f)|^2 f^2 dvol on the torus grid.

    The Hessian uses the conformal Christoffel corrections of e^{2u} g0;
    all derivatives are periodic central differences.
    """
    if np.any(f <= 0.0):
        raise ValueError("log-Hessian term needs a positive eigenfunction")
    n = geom.grid_n
    h = 1.0 / n

    def ddx(a):
        return (np.roll(a, -1, axis=0) - np.roll(a, 1, axis=0)) / (2.0 * h)

    def ddy(a):
        return (np.roll(a, -1, axis=1) - np.roll(a, 1, axis=1)) / (2.0 * h)

    phi = np.log(f).reshape(n, n)
    ug = u.reshape(n, n)
    px, py = ddx(phi), ddy(phi)
    ux, uy = ddx(ug), ddy(ug)
    pxx = (np.roll(phi, -1, axis=0) - 2.0 * phi + np.roll(phi, 1, axis=0)) / h**2
    pyy = (np.roll(phi, -1, axis=1) - 2.0 * phi + np.roll(phi, 1, axis=1)) / h**2
    pxy = ddy(ddx(phi))
    h11 = pxx - ux * px + uy * py
    h12 = pxy - uy * px - ux * py
    h22 = pyy + ux * px - uy * py
    e2u = np.exp(2.0 * ug)
    rg = r_field.reshape(n, n)
    t11 = 0.5 * rg * e2u - 2.0 * k_coeff * h11
    t12 = -2.0 * k_coeff * h12
    t22 = 0.5 * rg * e2u - 2.0 * k_coeff * h22
    tsq = np.exp(-4.0 * ug) * (t11 * t11 + 2.0 * t12 * t12 + t22 * t22)
    mass_g = geom.mass * np.exp(2.0 * u)
    return float(np.sum(tsq.ravel() * f * f * mass_g))


@dataclass(frozen=True)
class _RateIntegrals:
    """The five curvature integrals entering the derivative formulas."""

    R_f2: float        # int R f^2
    R2_f2: float       # int R^2 f^2
    ric2_f2: float     # int |Ric|^2 f^2
    R_grad: float      # int R |grad f|^2
    ric_grad: float    # int Ric(grad f, grad f)


def _einstein_integrals(state: MetricState, constraint: str) -> _RateIntegrals:
    n = state.family.n
    s = state.scale
    r = n * (n - 1) / s
    lam_rel = (n - 1) / s
    if constraint == "lowest":
        grad_energy = 0.0  # constant eigenfunction
    else:
        grad_energy = n / s  # int |grad f|^2 = lambda1 for a unit-norm eigenfunction
    return _RateIntegrals(
        R_f2=r,
        R2_f2=r * r,
        ric2_f2=r * r / n,
        R_grad=r * grad_energy,
        ric_grad=lam_rel * grad_energy,
    )


def _mesh_integrals(state: MetricState, f: np.ndarray) -> _RateIntegrals:
    r = conformal_scalar_curvature(state)
    r_grad = weighted_grad_integral(state, r, f)
    return _RateIntegrals(
        R_f2=integrate_scalar(state, r * f * f),
        R2_f2=integrate_scalar(state, r * r * f * f),
        ric2_f2=integrate_scalar(state, 0.5 * r * r * f * f),
        R_grad=r_grad,
        ric_grad=0.5 * r_grad,  # Ric = (R/2) g in two dimensions
    )


def _rate_integrals(state: MetricState, sr: SpectralResult) -> _RateIntegrals:
    if state.family.kind is FamilyKind.EINSTEIN_SPHERE:
        return _einstein_integrals(state, sr.constraint)
    if state.family.kind in CONFORMAL_KINDS:
        return _mesh_integrals(state, sr.f)
    raise UnsupportedFamilyError("derivative formulas need a spectral-capable family")


def lambda0_rate_expanded(state: MetricState, sr: SpectralResult, params: FlowParams) -> float:
    """Expected d(lambda0)/dt expanded in curvature integrals (rhs31 column)."""
    if sr.constraint != "lowest":
        raise ValueError("needs a converged lowest eigenpair")
    rho, c, n = params.rho, params.c, params.n
    a_coeff = coefficient_A(rho, c, n)
    ints = _rate_integrals(state, sr)
    return (
        (a_coeff - 2.0 * rho) * (c * ints.R2_f2 + ints.R_grad)
        - a_coeff * sr.value * ints.R_f2
        + 2.0 * ints.ric_grad
        + 2.0 * c * ints.ric2_f2
    )


def lambda0_rate_square_form(state: MetricState, sr: SpectralResult, params: FlowParams) -> float:
    """d(lambda0)/dt as a completed square plus curvature terms (rhs32 column).

    Needs the metric Hessian of log f: available in closed form on the
    round spheres (it vanishes for the constant eigenfunction) and by
    structured differences on the torus grid only.
    """
    if sr.constraint != "lowest":
        raise ValueError("needs a converged lowest eigenpair")
    rho, c, n = params.rho, params.c, params.n
    b_coeff = square_coefficient(rho, n)
    kind = state.family.kind
    if kind is FamilyKind.EINSTEIN_SPHERE:
        ints = _einstein_integrals(state, "lowest")
        square = ints.ric2_f2  # Hessian of log(constant) vanishes
    elif kind is FamilyKind.CONFORMAL_TORUS:
        ints = _mesh_integrals(state, sr.f)
        geom = geometry_for(state.family)
        r = conformal_scalar_curvature(state)
        square = _grid_square_term(geom, state.u, r, sr.f, coefficient_k(rho, n))
    else:
        raise UnsupportedFamilyError(
            "log-Hessian reconstruction is supported on the torus grid and round spheres only")
    return (
        b_coeff * square
        + (2.0 * c - b_coeff) * ints.ric2_f2
        - rho * sr.value * ints.R_f2
        - rho * c * ints.R2_f2
        - rho * ints.R_grad
    )


def lambda1_rate(state: MetricState, sr: SpectralResult, params: FlowParams) -> float:
    """Expected d(lambda1)/dt in curvature integrals (rhs41 column)."""
    if sr.constraint != "first_nonzero_meanzero":
        raise ValueError("needs a converged first nonzero eigenpair")
    rho, n = params.rho, params.n
    ints = _rate_integrals(state, sr)
    return (
        2.0 * ints.ric_grad
        + (1.0 - n * rho) * sr.value * ints.R_f2
        - ((2 - n) * rho + 1.0) * ints.R_grad
    )


# ---------------------------------------------------------------------------
# finite-difference cross check


def _state_at(traj: Trajectory, t: float) -> MetricState:
    times = [s.t for s in traj.samples]
    i = bisect.bisect_right(times, t + 1e-15) - 1
    i = max(i, 0)
    base = traj.samples[i]
    if abs(t - base.t) <= 1e-15 * max(1.0, abs(t)):
        return base.state
    return advance(base.state, traj.params, t - base.t)


def _eigenvalue_at(traj: Trajectory, which: str, t: float) -> float:
    state = _state_at(traj, t)
    if which == "lambda0":
        return lowest_eigenpair(build_operators(state, traj.params.c)).value
    if which == "lambda1":
        return first_nonzero_eigenpair(state).value
    raise ValueError(f"which must be 'lambda0' or 'lambda1', got {which!r}")


def fd_eigen_derivative(traj: Trajectory, which: str, t: float, h: float | None = None) -> float:
    """Finite-difference eigenvalue derivative along the trajectory.

    Central difference where both neighbours fit inside [0, t_stop];
    one-sided at t = 0. States at t +/- h are re-integrated forward from
    the nearest earlier trajectory sample.
    """
    t_stop = traj.t_stop
    if h is None:
        h = min(1e-4, (t_stop - t) / 10.0)
    if h <= 0 or t + h > t_stop + 1e-15:
        raise ValueError(f"step h = {h} does not fit inside the trajectory at t = {t}")
    lam_plus = _eigenvalue_at(traj, which, t + h)
    if t - h < 0.0:
        lam_here = _eigenvalue_at(traj, which, t)
        return (lam_plus - lam_here) / h
    lam_minus = _eigenvalue_at(traj, which, t - h)
    return (lam_plus - lam_minus) / (2.0 * h)


# ---------------------------------------------------------------------------
# hypotheses


@dataclass(frozen=True)
class HypothesisReport:
    """Which audit hypotheses hold for a run at its initial state."""

    admissible: bool
    lambda0_monotone: bool
    lambda0_threshold: float
    rescaled_monotone: bool
    rescaled_threshold: float
    lambda1_monotone: bool
    lambda1_deficit: float
    a: float
    lambda1_diverges: bool
    nonneg_curvature_operator: bool
    ricci_nonneg: bool
    notes: tuple[str, ...] = ()


def _ricci_relative_min(report: CurvatureReport) -> float:
    if report.ric.form == "constant_multiple":
        return report.ric.values[0]
    if report.ric.form == "milnor_diagonal":
        return min(report.ric.values)
    return 0.5 * report.R_min  # 2-D: eigenvalues R/2


def certified_nonneg_curvature_operator(state: MetricState, report: CurvatureReport) -> bool:
    """Family-level closed-form certificate, never a mesh estimate.

    Round spheres always qualify; SU(2) when all three Milnor-plane
    sectional curvatures are nonnegative; conformal surfaces when the
    scalar curvature (the single curvature-operator eigenvalue in 2-D,
    up to a positive factor) is nonnegative.
    """
    kind = state.family.kind
    if kind is FamilyKind.EINSTEIN_SPHERE:
        return True
    if kind is FamilyKind.SU2:
        from .curvature import su2_sectional

        return all(k >= 0.0 for k in su2_sectional(*state.abc))
    return report.R_min >= 0.0


def case1_threshold(rho: float, n: int) -> float:
    den = 4.0 - 8.0 * rho * (n - 1)
    if den <= 0.0:
        return float("inf")
    return (1.0 - rho * (n - 1)) ** 2 / den


def case2_threshold(rho: float, n: int) -> float:
    den = 2.0 * (1.0 - 2.0 * (n - 1) * rho)
    if den <= 0.0:
        return float("inf")
    return (1.0 - (n - 2) * rho) / den


def hypothesis_check(params: FlowParams, state0: MetricState, a: float = 0.0) -> HypothesisReport:
    """Evaluate every audit hypothesis from closed-form family facts.

    Reports rather than throws on unmet hypotheses; the pinching-type
    inequality is additionally re-checked along the flow by the audits.
    """
    if a < 0:
        raise ConfigurationError(f"a must be nonnegative (negative a is vacuous), got {a}")
    n = params.n
    rho = params.rho
    c = params.c
    report0 = curvature_report(state0)
    notes = []

    admissible = rho < admissibility_limit(n)

    thr1 = case1_threshold(rho, n)
    case1 = rho <= 0.0 and c >= thr1 and report0.R_min >= 0.0

    thr2 = case2_threshold(rho, n)
    cert = certified_nonneg_curvature_operator(state0, report0)
    ricci_nonneg = _ricci_relative_min(report0) >= 0.0
    case2 = (
        0.0 < rho <= admissibility_limit(n)
        and c >= thr2
        and (cert or (n == 3 and ricci_nonneg))
    )
    if 0.0 < rho <= admissibility_limit(n) and c >= thr2 and not cert and not (n == 3 and ricci_nonneg):
        notes.append("threshold met but no curvature-operator certificate for this family")

    deficit0 = pinching_deficit(report0, rho, a, n)
    one_minus = 1.0 - n * rho
    floor = 2.0 * a / one_minus if one_minus > 0 else float("inf")
    thm_lambda1 = (
        rho <= admissibility_limit(n)
        and deficit0 >= -DEFICIT_TOL
        and report0.R_min >= floor - DEFICIT_TOL
    )

    ricci_positive = _ricci_relative_min(report0) > 0.0
    diverges = n == 3 and rho < 0.25 and ricci_positive

    return HypothesisReport(
        admissible=admissible,
        lambda0_monotone=case1,
        lambda0_threshold=thr1,
        rescaled_monotone=case2,
        rescaled_threshold=thr2,
        lambda1_monotone=thm_lambda1,
        lambda1_deficit=deficit0,
        a=a,
        lambda1_diverges=diverges,
        nonneg_curvature_operator=cert,
        ricci_nonneg=ricci_nonneg,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# records


@dataclass
class MonitorRecord:
    """One time sample of every audited quantity; absent values stay None."""

    t: float
    lambda0: float | None = None
    lambda1: float | None = None
    Q: float | None = None
    rhs31: float | None = None
    rhs32: float | None = None
    rhs41: float | None = None
    fd0: float | None = None
    fd1: float | None = None
    R_min: float | None = None
    R_max: float | None = None
    sigma: float | None = None
    pinch: float | None = None
    flags: dict[str, bool] = field(default_factory=dict)

CSV_COLUMNS = (
    "t", "lambda0", "lambda1", "Q", "rhs31", "rhs32", "rhs41",
    "fd0", "fd1", "R_min", "R_max", "sigma", "pinch",
)


@dataclass(frozen=True)
class MonitorOptions:
    """What to evaluate along a trajectory and how often.

    ``eigen_stride`` counts trajectory samples between eigensolves;
    ``fd_stride`` counts eigen-bearing records between finite-difference
    derivative evaluations (0 disables them).
    """

    a: float = 0.0
    eigen_stride: int = 1
    fd_stride: int = 0
    fd_h: float | None = None
    lambda1_floor: float = 1e3


def build_records(traj: Trajectory, options: MonitorOptions = MonitorOptions()) -> list[MonitorRecord]:
    """Evaluate the monitored quantities at every trajectory sample."""
    params = traj.params
    spectral_ok = traj.family.kind is not FamilyKind.SU2
    report0 = traj.samples[0].report
    rp = None
    if report0.R_max > 0.0:
        rp = rescale_params(params.rho, params.c, params.n, report0.R_max)

    records: list[MonitorRecord] = []
    eigen_index = 0
    last = len(traj.samples) - 1
    for i, sample in enumerate(traj.samples):
        rec = MonitorRecord(
            t=sample.t,
            R_min=sample.report.R_min,
            R_max=sample.report.R_max,
            pinch=sample.report.pinch,
        )
        deficit = pinching_deficit(sample.report, params.rho, options.a, params.n)
        rec.flags["deficit_ok"] = deficit >= -DEFICIT_TOL
        if rp is not None and sample.t < rp.T_prime:
            rec.sigma = sigma_bound(rp.eps_max_R0, params.rho, sample.t)
        if spectral_ok and (i % options.eigen_stride == 0 or i == last):
            sr1 = first_nonzero_eigenpair(sample.state)
            rec.lambda1 = sr1.value
            rec.rhs41 = lambda1_rate(sample.state, sr1, params)
            if params.c != 0.0:
                sr0 = lowest_eigenpair(build_operators(sample.state, params.c))
                rec.lambda0 = sr0.value
                rec.rhs31 = lambda0_rate_expanded(sample.state, sr0, params)
                try:
                    rec.rhs32 = lambda0_rate_square_form(sample.state, sr0, params)
                except UnsupportedFamilyError:
                    rec.rhs32 = None
                if rp is not None and sample.t < rp.T_prime:
                    rec.Q = rescaled_quantity(sr0.value, sample.t, rp)
            if (
                options.fd_stride > 0
                and eigen_index % options.fd_stride == 0
                and sample.t < traj.t_stop
            ):
                h = options.fd_h
                if h is None:
                    h = min(1e-4, (traj.t_stop - sample.t) / 10.0)
                if h > 0:
                    rec.fd1 = fd_eigen_derivative(traj, "lambda1", sample.t, h)
                    if params.c != 0.0:
                        rec.fd0 = fd_eigen_derivative(traj, "lambda0", sample.t, h)
            eigen_index += 1
        records.append(rec)
    return records


# ---------------------------------------------------------------------------
# audits


@dataclass(frozen=True)
class AuditVerdict:
    name: str
    verdict: str  # "pass" | "fail" | "static" | "hypothesis-not-met" | "skipped"
    detail: str = ""

    @property
    def failed(self) -> bool:
        return self.verdict == "fail"


def _series_strictness(values: list[float]) -> tuple[str, str]:
    """Classify a sampled series as increasing, static, or failing."""
    if len(values) < 2:
        return "skipped", "fewer than two samples carry this quantity"
    deltas = np.diff(values)
    tols = STRICT_RTOL * (1.0 + np.abs(values[:-1]))
    if np.all(np.abs(deltas) <= tols):
        return "static", "series is constant to strictness tolerance"
    bad = np.nonzero(deltas <= tols)[0]
    if bad.size:
        j = int(bad[0])
        return "fail", f"non-increasing step at sample {j}: {values[j]} -> {values[j + 1]}"
    return "pass", f"strictly increasing over {len(values)} samples"


def _collect(records: list[MonitorRecord], attr: str) -> tuple[list[float], list[float]]:
    ts, vals = [], []
    for rec in records:
        v = getattr(rec, attr)
        if v is not None:
            ts.append(rec.t)
            vals.append(v)
    return ts, vals


def monotonicity_audit(
    records: list[MonitorRecord],
    hyp: HypothesisReport,
    stop_reason: str = "horizon",
    lambda1_floor: float = 1e3,
) -> list[AuditVerdict]:
    """Monotonicity and divergence verdicts over a record series."""
    if len(records) < 3:
        raise ValueError("need at least three records to audit monotonicity")
    out: list[AuditVerdict] = []

    _, lam0 = _collect(records, "lambda0")
    if not hyp.lambda0_monotone:
        out.append(AuditVerdict("lambda0_monotone", "hypothesis-not-met",
                                f"threshold {hyp.lambda0_threshold:.6g}"))
    elif not lam0:
        out.append(AuditVerdict("lambda0_monotone", "skipped", "no lambda0 data"))
    else:
        verdict, detail = _series_strictness(lam0)
        out.append(AuditVerdict("lambda0_monotone", verdict, detail))

    _, q_series = _collect(records, "Q")
    if not hyp.rescaled_monotone:
        out.append(AuditVerdict("Q_monotone", "hypothesis-not-met",
                                f"threshold {hyp.rescaled_threshold:.6g}"))
    elif not q_series:
        out.append(AuditVerdict("Q_monotone", "skipped", "no rescaled data"))
    else:
        verdict, detail = _series_strictness(q_series)
        out.append(AuditVerdict("Q_monotone", verdict, detail))

    if not hyp.lambda1_monotone:
        out.append(AuditVerdict("lambda1_monotone", "hypothesis-not-met",
                                f"initial deficit {hyp.lambda1_deficit:.6g}"))
    else:
        # the pinching-type inequality must hold along the flow: truncate the
        # series at the first sample where it is lost instead of failing
        lost_at = None
        usable: list[float] = []
        for rec in records:
            if not rec.flags.get("deficit_ok", True):
                lost_at = rec.t
                break
            if rec.lambda1 is not None:
                usable.append(rec.lambda1)
        if not usable:
            out.append(AuditVerdict("lambda1_monotone", "skipped", "no lambda1 data"))
        else:
            verdict, detail = _series_strictness(usable)
            if lost_at is not None and verdict in ("pass", "static"):
                detail += f"; hypothesis lost at t = {lost_at:.6g}"
            out.append(AuditVerdict("lambda1_monotone", verdict, detail))

    _, lam1 = _collect(records, "lambda1")
    if not hyp.lambda1_diverges:
        out.append(AuditVerdict("lambda1_divergence", "hypothesis-not-met",
                                "needs a positive-Ricci 3-manifold with rho < 1/4"))
    elif not lam1:
        out.append(AuditVerdict("lambda1_divergence", "skipped", "no lambda1 data"))
    else:
        pinch0 = records[0].pinch
        floor = min(pinch0, 1.0 / 3.0) if pinch0 is not None else 0.0
        ok = True
        detail = f"lower bound (3/2) * {floor:.6g} * R_min held"
        for rec in records:
            if rec.lambda1 is None or rec.R_min is None or rec.R_min <= 0:
                continue
            bound = 1.5 * floor * rec.R_min
            if rec.lambda1 < bound * (1.0 - SIGMA_SLACK):
                ok = False
                detail = f"lambda1 = {rec.lambda1:.6g} below bound {bound:.6g} at t = {rec.t:.6g}"
                break
        if ok and stop_reason == "blowup" and max(lam1) < lambda1_floor:
            ok = False
            detail = f"blow-up reached but max lambda1 = {max(lam1):.6g} < {lambda1_floor:.6g}"
        out.append(AuditVerdict("lambda1_divergence", "pass" if ok else "fail", detail))

    r_max0 = records[0].R_max
    r_min0 = records[0].R_min
    spread = max(abs(rec.R_max - r_max0) + abs(rec.R_min - r_min0) for rec in records)
    if spread <= STRICT_RTOL * (1.0 + abs(r_max0) + abs(r_min0)):
        out.append(AuditVerdict("max_R_exceeds_initial_min", "static", "curvature series constant"))
    else:
        beta = r_min0
        tol = STRICT_RTOL * (1.0 + abs(beta))
        bad = [rec for rec in records[1:] if rec.R_max - beta <= tol]
        if bad:
            out.append(AuditVerdict(
                "max_R_exceeds_initial_min", "fail",
                f"max R = {bad[0].R_max:.6g} fails to exceed beta = {beta:.6g} at t = {bad[0].t:.6g}"))
        else:
            out.append(AuditVerdict("max_R_exceeds_initial_min", "pass",
                                    f"max R stayed above beta = {beta:.6g}"))
    return out


def flow_audits(
    records: list[MonitorRecord],
    hyp: HypothesisReport,
    params: FlowParams,
    t_stop: float,
    stop_reason: str,
) -> list[AuditVerdict]:
    """Preserved-condition and comparison-bound verdicts for one run."""
    out: list[AuditVerdict] = []

    ok = True
    detail = "min R nondecreasing"
    for a, b in zip(records[:-1], records[1:]):
        if b.R_min < a.R_min - R_MIN_TOL * (1.0 + abs(a.R_min)):
            ok = False
            detail = f"min R dropped {a.R_min:.6g} -> {b.R_min:.6g} at t = {b.t:.6g}"
            break
    out.append(AuditVerdict("R_min_monotone", "pass" if ok else "fail", detail))

    r_max0 = records[0].R_max
    if not hyp.nonneg_curvature_operator or r_max0 <= 0.0:
        out.append(AuditVerdict("sigma_comparison", "hypothesis-not-met",
                                "needs a certified nonnegative curvature operator and max R(0) > 0"))
    else:
        ok = True
        detail = "max R dominated by the comparison solution"
        for rec in records:
            if rec.sigma is None:
                continue
            if rec.R_max > rec.sigma * (1.0 + SIGMA_SLACK):
                ok = False
                detail = f"max R = {rec.R_max:.6g} exceeds sigma = {rec.sigma:.6g} at t = {rec.t:.6g}"
                break
        out.append(AuditVerdict("sigma_comparison", "pass" if ok else "fail", detail))

    pinch0 = records[0].pinch
    if params.n != 3 or params.rho >= 0.25 or pinch0 is None or pinch0 < 0.0:
        out.append(AuditVerdict("pinch_preserved", "hypothesis-not-met",
                                "needs n = 3, rho < 1/4, and nonnegative initial pinching"))
    else:
        ok = True
        detail = f"pinching ratio stayed above {pinch0:.6g}"
        for rec in records:
            if rec.pinch is None or rec.pinch < pinch0 - PINCH_TOL:
                ok = False
                got = "undefined" if rec.pinch is None else f"{rec.pinch:.6g}"
                detail = f"pinch = {got} below initial {pinch0:.6g} at t = {rec.t:.6g}"
                break
        out.append(AuditVerdict("pinch_preserved", "pass" if ok else "fail", detail))

    r_min0 = records[0].R_min
    if r_min0 is None or r_min0 <= 0.0:
        out.append(AuditVerdict("blowup_time_bound", "hypothesis-not-met",
                                "needs min R(0) > 0"))
    else:
        bound = params.n / (2.0 * (1.0 - params.n * params.rho) * r_min0)
        if t_stop <= bound * (1.0 + TIME_BOUND_SLACK):
            out.append(AuditVerdict("blowup_time_bound", "pass",
                                    f"t_stop = {t_stop:.6g} <= bound = {bound:.6g}"))
        else:
            out.append(AuditVerdict("blowup_time_bound", "fail",
                                    f"t_stop = {t_stop:.6g} exceeds bound = {bound:.6g}"))

    if not hyp.nonneg_curvature_operator or r_max0 <= 0.0 or stop_reason != "blowup":
        out.append(AuditVerdict("rescale_horizon", "hypothesis-not-met",
                                "needs a certified run integrated to blow-up"))
    else:
        t_prime = 1.0 / (2.0 * (1.0 - params.rho) * r_max0)
        if t_prime <= t_stop * (1.0 + TIME_BOUND_SLACK):
            out.append(AuditVerdict("rescale_horizon", "pass",
                                    f"T' = {t_prime:.6g} <= t_stop = {t_stop:.6g}"))
        else:
            out.append(AuditVerdict("rescale_horizon", "fail",
                                    f"T' = {t_prime:.6g} exceeds t_stop = {t_stop:.6g}"))
    return out
