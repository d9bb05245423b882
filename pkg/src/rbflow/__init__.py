"""Numerical laboratory for the rho-weighted Ricci curvature flow.

Evolves closed model manifolds under dg/dt = -2 (Ric - rho R g), computes
spectra of the Laplace operator and of -Lap + c R on the evolving metrics,
and audits monotonicity statements, comparison bounds, and eigenvalue
derivative formulas at desk scale.
"""

from .config import RunConfig, parse_config, render_config
from .curvature import CurvatureReport, curvature_report, pinching_deficit
from .errors import ConfigurationError, NumericalError, UnsupportedFamilyError
from .families import (
    BaseGeometry,
    FamilyKind,
    FamilySpec,
    MetricState,
    geometry_for,
    init_state,
    integrate_scalar,
    unit_sphere_volume,
    volume,
)
from .flow import (
    FlowParams,
    Trajectory,
    advance,
    cfl_dt,
    evolution_identity_residuals,
    integrate,
    rb_rhs,
    rk4_step,
    sigma_bound,
)
from .monitor import (
    AuditVerdict,
    HypothesisReport,
    MonitorOptions,
    MonitorRecord,
    RescaleParams,
    build_records,
    fd_eigen_derivative,
    flow_audits,
    hypothesis_check,
    lambda0_rate_expanded,
    lambda0_rate_square_form,
    lambda1_rate,
    monotonicity_audit,
    rescale_params,
    rescaled_quantity,
)
from .runner import RunResult, RunSummary, run_scenario
from .scenarios import SCENARIOS, run_check
from .spectral import (
    ContinuityAudit,
    DiscreteOperators,
    SpectralResult,
    build_operators,
    continuity_ratio_check,
    first_nonzero_eigenpair,
    lowest_eigenpair,
    rayleigh_quotient,
    smallest_laplace_eigenvalues,
)

__version__ = "0.1.0"
