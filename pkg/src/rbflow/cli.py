"""Command-line interface.

``rbflow run`` executes one config file, ``rbflow check`` runs builtin
self-validating scenarios, and ``rbflow sweep`` fans a config out over a
parameter range with one worker per run (capped by RBFLOW_THREADS).

Exit codes: 0 all requested audits pass (or report static /
hypothesis-not-met), 1 an audit or check failed, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys
from pathlib import Path

from .config import parse_config, render_config
from .errors import ConfigurationError, NumericalError
from .runner import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ERROR, run_scenario
from .scenarios import SCENARIOS, run_check


def _load_config(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError([f"cannot read config {path}: {exc}"]) from exc
    return parse_config(text)


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    result = run_scenario(config, out_dir=args.out, formats=args.formats)
    for verdict in result.summary.verdicts:
        print(f"{verdict['name']}: {verdict['verdict']} ({verdict['detail']})")
    print(f"t_stop = {result.summary.t_stop} stop_reason = {result.summary.stop_reason}")
    if result.summary.error:
        print(f"error: {result.summary.error}", file=sys.stderr)
    return result.exit_code


def _cmd_check(args) -> int:
    names = sorted(SCENARIOS) if args.scenario == "all" else [args.scenario]
    worst = 0
    for name in names:
        out_dir = Path(args.out) / name if args.out else None
        code, lines = run_check(name, out_dir=out_dir)
        for line in lines:
            print(line)
        worst = max(worst, code)
    return worst


def _parse_vary(vary: str) -> tuple[str, list[float]]:
    try:
        key, _, spec = vary.partition("=")
        start_s, stop_s, step_s = spec.split(":")
        start, stop, step = float(start_s), float(stop_s), float(step_s)
    except ValueError as exc:
        raise ConfigurationError(
            [f"--vary must look like key=start:stop:step, got {vary!r}"]) from exc
    if step <= 0:
        raise ConfigurationError(["--vary step must be positive"])
    count = int(round((stop - start) / step)) + 1
    values = [start + i * step for i in range(count) if start + i * step <= stop + 1e-12]
    return key.strip(), values


def _run_one_sweep(payload: tuple[str, str, str | None]) -> tuple[str, int]:
    text, out_dir, formats = payload
    config = parse_config(text)
    result = run_scenario(config, out_dir=out_dir, formats=formats)
    return out_dir, result.exit_code


def _cmd_sweep(args) -> int:
    base = _load_config(args.config)
    key, values = _parse_vary(args.vary)
    jobs = []
    for value in values:
        text = render_config(base)
        lines = [ln for ln in text.splitlines() if not ln.startswith(f"{key} ")]
        lines.append(f"{key} = {value}")
        job_text = "\n".join(lines) + "\n"
        parse_config(job_text)  # validate every point before launching any run
        run_dir = str(Path(args.out) / f"run-{key}-{value:.6g}")
        jobs.append((job_text, run_dir, args.formats))

    cap = os.environ.get("RBFLOW_THREADS")
    workers = max(1, int(cap)) if cap else (os.cpu_count() or 1)
    workers = min(workers, len(jobs))
    worst = 0
    if workers == 1:
        outcomes = [_run_one_sweep(job) for job in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one_sweep, jobs))
    for run_dir, code in outcomes:
        print(f"{run_dir}: exit {code}")
        worst = max(worst, code)
    return worst


def _cmd_scenarios(_args) -> int:
    for name in sorted(SCENARIOS):
        print(f"{name}: {SCENARIOS[name].description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rbflow",
        description="Curvature-flow runs with spectral monotonicity audits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--formats", default=None, help="comma list from csv,json,plot")
    p_run.set_defaults(func=_cmd_run)

    p_check = sub.add_parser("check", help="run a builtin scenario (or all)")
    p_check.add_argument("scenario")
    p_check.add_argument("--out", default=None)
    p_check.set_defaults(func=_cmd_check)

    p_sweep = sub.add_parser("sweep", help="vary one key over a range")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--vary", required=True, metavar="key=start:stop:step")
    p_sweep.add_argument("--formats", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_ls = sub.add_parser("scenarios", help="list builtin scenarios")
    p_ls.set_defaults(func=_cmd_scenarios)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        for message in exc.errors:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
