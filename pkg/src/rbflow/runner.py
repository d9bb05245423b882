"""Run one validated configuration end to end and summarize it."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .config import RunConfig
from .emit import emit_series
from .errors import NumericalError
from .families import init_state
from .flow import Trajectory, cfl_dt, integrate
from .monitor import (
    CSV_COLUMNS,
    AuditVerdict,
    MonitorRecord,
    build_records,
    flow_audits,
    hypothesis_check,
    monotonicity_audit,
)

EXIT_OK = 0
EXIT_AUDIT_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

_TARGET_SAMPLES = 256
_NON_FAILING = ("pass", "static", "hypothesis-not-met", "skipped")


@dataclass
class RunSummary:
    """Everything a caller needs to judge one run, JSON-serializable."""

    config: dict
    t_stop: float | None
    stop_reason: str
    hypotheses: dict
    verdicts: list[dict]
    extrema: dict[str, list[float]]
    duration_s: float
    error: str | None = None


@dataclass
class RunResult:
    summary: RunSummary
    records: list[MonitorRecord] = field(default_factory=list)
    trajectory: Trajectory | None = None
    exit_code: int = EXIT_OK


def _auto_sample_every(config: RunConfig, state0) -> int:
    if config.sample_every > 0:
        return config.sample_every
    if config.dt_policy == "cfl_adaptive":
        dt = cfl_dt(state0, config.rho)
    else:
        dt = config.dt_init
    steps = max(1, math.ceil(config.t_max / dt))
    return max(1, steps // _TARGET_SAMPLES)


def _extrema(records: list[MonitorRecord]) -> dict[str, list[float]]:
    out: dict[str, list[float]] = {}
    for col in CSV_COLUMNS:
        values = [getattr(r, col) for r in records if getattr(r, col) is not None]
        if values:
            out[col] = [min(values), max(values)]
    return out


def run_scenario(config: RunConfig, out_dir: str | Path | None = None,
                 formats: str | None = None) -> RunResult:
    """Integrate, monitor, audit, and emit one configured run.

    Numerical failures are recorded in the summary with exit code 3;
    configuration errors propagate to the caller (they are detected
    before any computation by ``parse_config``).
    """
    start = time.perf_counter()
    config_echo = {k: (v.value if hasattr(v, "value") else v) for k, v in asdict(config).items()}
    spec = config.family_spec()
    params = config.flow_params()
    try:
        state0 = init_state(spec)
        traj = integrate(state0, params, _auto_sample_every(config, state0))
        hyp = hypothesis_check(params, state0, config.a)
        records = build_records(traj, config.monitor_options())
        requested = config.audit_names()
        if len(records) < 3:
            verdicts = [AuditVerdict(name, "skipped", "fewer than three records")
                        for name in requested]
        else:
            produced = {v.name: v for v in monotonicity_audit(
                records, hyp, traj.stop_reason, config.lambda1_floor)}
            produced.update({v.name: v for v in flow_audits(
                records, hyp, params, traj.t_stop, traj.stop_reason)})
            verdicts = [produced.get(name, AuditVerdict(name, "skipped", "not produced"))
                        for name in requested]
        summary = RunSummary(
            config=config_echo,
            t_stop=traj.t_stop,
            stop_reason=traj.stop_reason,
            hypotheses=asdict(hyp),
            verdicts=[asdict(v) for v in verdicts],
            extrema=_extrema(records),
            duration_s=time.perf_counter() - start,
        )
        code = EXIT_OK if all(v.verdict in _NON_FAILING for v in verdicts) else EXIT_AUDIT_FAILED
        result = RunResult(summary=summary, records=records, trajectory=traj, exit_code=code)
    except NumericalError as exc:
        summary = RunSummary(
            config=config_echo,
            t_stop=None,
            stop_reason="error",
            hypotheses={},
            verdicts=[],
            extrema={},
            duration_s=time.perf_counter() - start,
            error=str(exc),
        )
        return RunResult(summary=summary, exit_code=EXIT_NUMERICAL_ERROR)

    target = Path(out_dir) if out_dir else (Path(config.out_dir) if config.out_dir else None)
    fmt_string = formats if formats is not None else config.formats
    if target is not None:
        for fmt in (t.strip() for t in fmt_string.split(",") if t.strip()):
            emit_series(result.records, fmt, target, summary=result.summary)
    return result
