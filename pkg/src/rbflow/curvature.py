"""Curvature quantities of a metric state.

Scalar curvature, a structured Ricci representation, its squared norm,
extrema, the pinching ratio and a curvature-magnitude proxy used for
blow-up detection. All formulas are closed form except the conformal
ones, which use the base stiffness/mass pair as the flat Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .families import CONFORMAL_KINDS, FamilyKind, MetricState, geometry_for


@dataclass(frozen=True)
class RicciForm:
    """Structured Ricci tensor relative to the metric.

    ``constant_multiple`` stores the single relative eigenvalue of an
    Einstein metric, ``half_scalar`` marks the 2-D identity Ric = (R/2) g,
    and ``milnor_diagonal`` stores the three relative eigenvalues of a
    diagonal left-invariant metric.
    """

    form: str  # "constant_multiple" | "half_scalar" | "milnor_diagonal"
    values: tuple[float, ...] = ()


@dataclass(frozen=True)
class CurvatureReport:
    """Everything the flow, monitors, and spectral builders need.

    ``pinch`` is the largest eps with Ric >= eps * R * g, defined only
    when R_min > 0. ``riem_mag`` is the blow-up proxy: |R| for Einstein
    metrics, max |R| in 2-D, and the largest |sectional curvature| on SU(2).
    """

    R: float | np.ndarray
    ric: RicciForm
    ric_norm_sq: float | np.ndarray
    R_min: float
    R_max: float
    pinch: float | None
    riem_mag: float


def milnor_ricci(a: float, b: float, c: float) -> tuple[float, float, float]:
    """Diagonal Ricci entries of a left-invariant SU(2) metric (a, b, c)."""
    ra = 2.0 * (a * a - (b - c) ** 2) / (b * c)
    rb = 2.0 * (b * b - (c - a) ** 2) / (c * a)
    rc = 2.0 * (c * c - (a - b) ** 2) / (a * b)
    return ra, rb, rc


def su2_sectional(a: float, b: float, c: float) -> tuple[float, float, float]:
    """Sectional curvatures of the three Milnor coordinate planes.

    In dimension three the sectional curvatures are determined by the
    relative Ricci eigenvalues: K_ij = (ric_i + ric_j - ric_k) / 2.
    """
    ra, rb, rc = milnor_ricci(a, b, c)
    r1, r2, r3 = ra / a, rb / b, rc / c
    return (
        0.5 * (r2 + r3 - r1),  # plane (b, c)
        0.5 * (r1 + r3 - r2),  # plane (a, c)
        0.5 * (r1 + r2 - r3),  # plane (a, b)
    )


def conformal_scalar_curvature(state: MetricState) -> np.ndarray:
    """R = e^{-2u} (R0 - 2 Lap0 u) with Lap0 = -mass^{-1} stiffness."""
    geom = geometry_for(state.family)
    u = state.u
    return np.exp(-2.0 * u) * (geom.base_curvature + 2.0 * (geom.stiffness @ u) / geom.mass)


def curvature_report(state: MetricState) -> CurvatureReport:
    kind = state.family.kind
    if kind is FamilyKind.EINSTEIN_SPHERE:
        n = state.family.n
        s = state.scale
        if s <= 0:
            raise ConfigurationError(f"nonpositive scale {s}")
        r = n * (n - 1) / s
        lam_rel = (n - 1) / s
        return CurvatureReport(
            R=r,
            ric=RicciForm("constant_multiple", (lam_rel,)),
            ric_norm_sq=r * r / n,
            R_min=r,
            R_max=r,
            pinch=1.0 / n if r > 0 else None,
            riem_mag=abs(r),
        )
    if kind is FamilyKind.SU2:
        a, b, c = state.abc
        if min(a, b, c) <= 0:
            raise ConfigurationError(f"nonpositive su2 coefficients {(a, b, c)}")
        ra, rb, rc = milnor_ricci(a, b, c)
        rel = (ra / a, rb / b, rc / c)
        r = sum(rel)
        return CurvatureReport(
            R=r,
            ric=RicciForm("milnor_diagonal", rel),
            ric_norm_sq=sum(v * v for v in rel),
            R_min=r,
            R_max=r,
            pinch=min(rel) / r if r > 0 else None,
            riem_mag=max(abs(k) for k in su2_sectional(a, b, c)),
        )
    if kind in CONFORMAL_KINDS:
        r = conformal_scalar_curvature(state)
        r_min = float(r.min())
        r_max = float(r.max())
        return CurvatureReport(
            R=r,
            ric=RicciForm("half_scalar"),
            ric_norm_sq=r * r / 2.0,
            R_min=r_min,
            R_max=r_max,
            pinch=0.5 if r_min > 0 else None,
            riem_mag=float(np.max(np.abs(r))),
        )
    raise ConfigurationError(f"unknown family kind {kind}")


def pinching_deficit(report: CurvatureReport, rho: float, a: float, n: int) -> float:
    """Worst-case margin of Ric >= ((1 + (2-n) rho)/2) R g - a g.

    Returns the minimum over points and frame directions of
    ``ric_eigenvalue - kappa * R + a`` with kappa = (1 + (2-n) rho) / 2;
    a nonnegative value means the bound holds everywhere.
    """
    kappa = (1.0 + (2 - n) * rho) / 2.0
    if report.ric.form == "constant_multiple":
        lam_rel = report.ric.values[0]
        return lam_rel - kappa * float(report.R_min) + a
    if report.ric.form == "milnor_diagonal":
        return min(report.ric.values) - kappa * float(report.R_min) + a
    # 2-D: eigenvalues are R/2 pointwise
    r = np.asarray(report.R, dtype=float)
    return float(np.min((0.5 - kappa) * r)) + a
