"""Flat ``key = value`` run configuration: parsing, validation, rendering.

Lines hold one assignment each; ``#`` starts a comment. Parsing validates
every key before any computation and reports every problem at once, each
with its line number. ``render_config`` writes a text that parses back to
an equal config.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigurationError
from .families import CONFORMAL_KINDS, FamilyKind, FamilySpec
from .flow import FlowParams, admissibility_limit, validate_flow_params
from .monitor import MonitorOptions

FORMATS = ("csv", "json", "plot")
AUDIT_NAMES = (
    "lambda0_monotone", "Q_monotone", "lambda1_monotone", "lambda1_divergence",
    "max_R_exceeds_initial_min", "R_min_monotone", "sigma_comparison",
    "pinch_preserved", "blowup_time_bound", "rescale_horizon",
)


@dataclass(frozen=True)
class RunConfig:
    """One validated run: family, flow, spectral, monitor, and output keys."""

    family: FamilyKind
    n: int
    rho: float
    t_max: float = 1.0
    c: float = 0.0
    resolution: int = 0
    preset: str = "zero"
    amplitude: float = 0.0
    seed: int = 0
    s0: float = 1.0
    su2_a: float = 1.0
    su2_b: float = 1.0
    su2_c: float = 1.0
    dt_init: float = 1e-3
    dt_policy: str = "fixed"
    blowup_threshold: float = 1e6
    sample_every: int = 0  # 0 = pick automatically from the step estimate
    eigen_stride: int = 1
    fd_stride: int = 0
    fd_h: float = 0.0  # 0 = default step rule
    a: float = 0.0
    audits: str = "all"
    lambda1_floor: float = 1e3
    out_dir: str = ""
    formats: str = "csv,json"

    def family_spec(self) -> FamilySpec:
        return FamilySpec(
            kind=self.family,
            n=self.n,
            resolution=self.resolution if self.family in CONFORMAL_KINDS else None,
            preset=self.preset,
            amplitude=self.amplitude,
            seed=self.seed,
            s0=self.s0,
            su2_abc=(self.su2_a, self.su2_b, self.su2_c),
        )

    def flow_params(self) -> FlowParams:
        return FlowParams(
            rho=self.rho,
            c=self.c,
            n=self.n,
            dt_init=self.dt_init,
            dt_policy=self.dt_policy,
            t_max=self.t_max,
            blowup_threshold=self.blowup_threshold,
        )

    def monitor_options(self) -> MonitorOptions:
        return MonitorOptions(
            a=self.a,
            eigen_stride=self.eigen_stride,
            fd_stride=self.fd_stride,
            fd_h=self.fd_h if self.fd_h > 0 else None,
            lambda1_floor=self.lambda1_floor,
        )

    def audit_names(self) -> tuple[str, ...]:
        if self.audits == "all":
            return AUDIT_NAMES
        return tuple(t.strip() for t in self.audits.split(",") if t.strip())


_FAMILY_TOKENS = {k.value: k for k in FamilyKind}

# key -> (converter tag, families the key applies to; None = all)
_SCHEMA: dict[str, tuple[str, tuple[FamilyKind, ...] | None]] = {
    "family": ("family", None),
    "n": ("int", None),
    "rho": ("float", None),
    "c": ("float", None),
    "t_max": ("float", None),
    "resolution": ("int", CONFORMAL_KINDS),
    "preset": ("str", CONFORMAL_KINDS),
    "amplitude": ("float", CONFORMAL_KINDS),
    "seed": ("int", CONFORMAL_KINDS),
    "s0": ("float", (FamilyKind.EINSTEIN_SPHERE,)),
    "su2_a": ("float", (FamilyKind.SU2,)),
    "su2_b": ("float", (FamilyKind.SU2,)),
    "su2_c": ("float", (FamilyKind.SU2,)),
    "dt_init": ("float", None),
    "dt_policy": ("str", None),
    "blowup_threshold": ("float", None),
    "sample_every": ("int", None),
    "eigen_stride": ("int", None),
    "fd_stride": ("int", None),
    "fd_h": ("float", None),
    "a": ("float", None),
    "audits": ("str", None),
    "lambda1_floor": ("float", None),
    "out_dir": ("str", None),
    "formats": ("str", None),
}

_REQUIRED = ("family", "rho")


def _convert(tag: str, raw: str):
    if tag == "int":
        return int(raw)
    if tag == "float":
        return float(raw)
    if tag == "family":
        if raw not in _FAMILY_TOKENS:
            raise ValueError(f"unknown family {raw!r}; choose from {sorted(_FAMILY_TOKENS)}")
        return _FAMILY_TOKENS[raw]
    return raw


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config; raises with every error found."""
    errors: list[str] = []
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _SCHEMA:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        tag, _families = _SCHEMA[key]
        try:
            values[key] = _convert(tag, raw)
        except ValueError as exc:
            errors.append(f"line {lineno}: bad value for {key!r}: {exc}")
            continue
        lines[key] = lineno

    for key in _REQUIRED:
        if key not in values:
            errors.append(f"missing required key {key!r}")

    family = values.get("family")
    if isinstance(family, FamilyKind):
        for key, (_tag, applicable) in _SCHEMA.items():
            if key in values and applicable is not None and family not in applicable:
                errors.append(
                    f"line {lines[key]}: key {key!r} does not apply to family {family.value!r}")
        if family in CONFORMAL_KINDS and "resolution" not in values:
            errors.append("missing required key 'resolution' for a discretized family")
        if family is FamilyKind.EINSTEIN_SPHERE and "n" not in values:
            errors.append("missing required key 'n' for einstein_sphere")
        values.setdefault("n", 2 if family in CONFORMAL_KINDS else 3)
        values.setdefault(
            "dt_policy", "cfl_adaptive" if family in CONFORMAL_KINDS else "fixed")
        values.setdefault(
            "eigen_stride", 8 if family in CONFORMAL_KINDS else 1)
        # cross-key rules that need only family / n / rho run here so they
        # are reported even when other keys are missing or broken
        n_val = values.get("n")
        if isinstance(n_val, int) and n_val >= 2:
            expected_n = {FamilyKind.SU2: 3}.get(family, 2 if family in CONFORMAL_KINDS else None)
            if expected_n is not None and n_val != expected_n:
                errors.append(
                    f"line {lines.get('n', lines.get('family'))}: "
                    f"{family.value} requires n = {expected_n}, got {n_val}")
            rho_val = values.get("rho")
            if isinstance(rho_val, float):
                limit = admissibility_limit(n_val)
                prefix = f"line {lines['rho']}: " if "rho" in lines else ""
                if family in CONFORMAL_KINDS and not rho_val < limit:
                    errors.append(
                        prefix + f"rho must be < 1/(2(n-1)) = {limit} for PDE families, got {rho_val}")
                elif family not in CONFORMAL_KINDS and rho_val > limit:
                    errors.append(
                        prefix + f"rho must be <= 1/(2(n-1)) = {limit}, got {rho_val}")
        if values.get("dt_policy") == "cfl_adaptive" and family not in CONFORMAL_KINDS:
            errors.append("cfl_adaptive stepping applies only to the conformal families")

    if "dt_policy" in values and values["dt_policy"] not in ("fixed", "cfl_adaptive"):
        errors.append(
            f"line {lines.get('dt_policy', '?')}: dt_policy must be 'fixed' or 'cfl_adaptive'")
    for key in ("sample_every", "eigen_stride", "fd_stride", "seed"):
        if key in values and values[key] < 0:
            errors.append(f"line {lines[key]}: {key} must be nonnegative")
    if "eigen_stride" in values and values["eigen_stride"] == 0:
        errors.append(f"line {lines.get('eigen_stride', '?')}: eigen_stride must be >= 1")
    if "formats" in values:
        tokens = [t.strip() for t in str(values["formats"]).split(",") if t.strip()]
        bad = [t for t in tokens if t not in FORMATS]
        if bad:
            errors.append(
                f"line {lines['formats']}: unknown formats {bad}; choose from {list(FORMATS)}")
    if "audits" in values and values["audits"] != "all":
        tokens = [t.strip() for t in str(values["audits"]).split(",") if t.strip()]
        bad = [t for t in tokens if t not in AUDIT_NAMES]
        if bad:
            errors.append(
                f"line {lines['audits']}: unknown audits {bad}; choose from {list(AUDIT_NAMES)}")

    if errors:
        raise ConfigurationError(errors)

    config = RunConfig(**values)  # type: ignore[arg-type]
    semantic: list[str] = []
    try:
        spec = config.family_spec()
    except ConfigurationError as exc:
        semantic.extend(exc.errors)
        spec = None
    try:
        flow_params = config.flow_params()
    except ConfigurationError as exc:
        semantic.extend(exc.errors)
        flow_params = None
    if flow_params is not None and spec is not None:
        try:
            validate_flow_params(flow_params, spec)
        except ConfigurationError as exc:
            semantic.extend(exc.errors)
    if config.a < 0:
        semantic.append("a must be nonnegative")
    if semantic:
        def _tag(msg: str) -> str:
            key = "rho" if "rho" in msg else ("a" if msg.startswith("a must") else "family")
            lineno = lines.get(key)
            return f"line {lineno}: {msg}" if lineno else msg

        raise ConfigurationError([_tag(m) for m in semantic])
    return config


def render_config(config: RunConfig) -> str:
    """Serialize a config so that parsing it back gives an equal value."""
    out = []
    for f in fields(RunConfig):
        _tag, applicable = _SCHEMA[f.name]
        if applicable is not None and config.family not in applicable:
            continue
        value = getattr(config, f.name)
        if isinstance(value, FamilyKind):
            value = value.value
        out.append(f"{f.name} = {value}")
    return "\n".join(out) + "\n"
