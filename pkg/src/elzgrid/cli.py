"""Command-line front end: run scenarios or studies, emit CSV/JSON/plots.

Exit codes: 0 success, 2 configuration error, 3 simulation error (kind and
simulation time go to stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ParseError, ValidationError, parse_config_file
from .control import VoltageCollapse
from .engine import (
    CASE_NAMES,
    Scenario,
    ScenarioMetrics,
    SimulationTrace,
    StudyResult,
    TRACE_COLUMNS,
    run,
    run_study,
)
from .network import SingularNetwork
from .plant import FrequencyTrip

CSV_HEADER = ",".join(TRACE_COLUMNS)

_SIM_ERRORS = (SingularNetwork, FrequencyTrip, VoltageCollapse)


def write_trace_csv(trace: SimulationTrace, path: Path) -> None:
    """Fixed-header CSV, SI units, 9 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        columns = [trace[name] for name in TRACE_COLUMNS]
        for row in zip(*columns):
            fh.write(",".join(f"{v:.9g}" for v in row) + "\n")


def read_trace_csv(path: Path) -> SimulationTrace:
    data = np.genfromtxt(path, delimiter=",", names=True)
    if list(data.dtype.names) != list(TRACE_COLUMNS):
        raise ValueError(f"unexpected CSV header in {path}")
    return SimulationTrace({name: np.atleast_1d(data[name]) for name in TRACE_COLUMNS})


def emit_outputs(
    trace: SimulationTrace,
    metrics: ScenarioMetrics,
    out_dir: Path,
    name: str = "scenario",
    resolved_config: dict | None = None,
) -> list[Path]:
    """Write the trace CSV and metrics JSON for one run; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    write_trace_csv(trace, csv_path)
    summary = {"metrics": metrics.as_dict()}
    if resolved_config is not None:
        summary["config"] = resolved_config
    json_path = out_dir / f"{name}_metrics.json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    return [csv_path, json_path]


# gnuplot comparison scripts mirroring the published figure set: each entry is
# (script name, title, [(case, column, label), ...], y-labels per axis pair)
_PLOTS = [
    (
        "fig_der_p_f_nosec",
        "DER active power and frequency, no secondary control",
        [
            ("constant_nosec", "P_G", "P_G constant ELZ"),
            ("supporting_nosec", "P_G", "P_G supporting ELZ"),
            ("constant_nosec", "f", "f constant ELZ"),
            ("supporting_nosec", "f", "f supporting ELZ"),
        ],
    ),
    (
        "fig_der_p_f_sec",
        "DER active power and frequency, secondary control",
        [
            ("constant_sec", "P_G", "P_G constant ELZ"),
            ("supporting_sec", "P_G", "P_G supporting ELZ"),
            ("constant_sec", "f", "f constant ELZ"),
            ("supporting_sec", "f", "f supporting ELZ"),
        ],
    ),
    (
        "fig_elz_p",
        "Electrolyzer active power",
        [
            ("constant_nosec", "P_E", "constant"),
            ("supporting_nosec", "P_E", "no secondary"),
            ("supporting_sec", "P_E", "secondary"),
        ],
    ),
    (
        "fig_der_q_v_nosec",
        "DER reactive power and PCC voltage, no secondary control",
        [
            ("constant_nosec", "Q_G", "Q_G constant ELZ"),
            ("supporting_nosec", "Q_G", "Q_G supporting ELZ"),
            ("constant_nosec", "V_pcc", "V constant ELZ"),
            ("supporting_nosec", "V_pcc", "V supporting ELZ"),
        ],
    ),
    (
        "fig_der_q_v_sec",
        "DER reactive power and PCC voltage, secondary control",
        [
            ("constant_sec", "Q_G", "Q_G constant ELZ"),
            ("supporting_sec", "Q_G", "Q_G supporting ELZ"),
            ("constant_sec", "V_pcc", "V constant ELZ"),
            ("supporting_sec", "V_pcc", "V supporting ELZ"),
        ],
    ),
    (
        "fig_elz_q_v",
        "Electrolyzer reactive power and PCC voltage",
        [
            ("supporting_nosec", "Q_E", "Q_E no secondary"),
            ("supporting_sec", "Q_E", "Q_E secondary"),
            ("supporting_nosec", "V_pcc", "V no secondary"),
            ("supporting_sec", "V_pcc", "V secondary"),
        ],
    ),
]


def _column_index(name: str) -> int:
    return TRACE_COLUMNS.index(name) + 1  # gnuplot columns are 1-based


def write_plot_scripts(out_dir: Path, cases: list[str]) -> list[Path]:
    paths = []
    for script, title, series in _PLOTS:
        usable = [s for s in series if s[0] in cases]
        if not usable:
            continue
        lines = [
            "set datafile separator ','",
            f"set title '{title}'",
            "set xlabel 'time (s)'",
            "set key outside",
        ]
        plots = ", ".join(
            f"'{case}.csv' using 1:{_column_index(col)} with lines title '{label}'"
            for case, col, label in usable
        )
        lines.append("plot " + plots)
        path = Path(out_dir) / f"{script}.gp"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def emit_study_outputs(
    result: StudyResult, out_dir: Path, resolved_config: dict | None = None
) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, trace in result.traces.items():
        p = out_dir / f"{name}.csv"
        write_trace_csv(trace, p)
        paths.append(p)
    summary = {"comparison": result.comparison()}
    if resolved_config is not None:
        summary["config"] = resolved_config
    json_path = out_dir / "study_metrics.json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    paths.append(json_path)
    paths.extend(write_plot_scripts(out_dir, list(result.traces)))
    return paths


def _check_writable(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    probe = out_dir / ".write_probe"
    try:
        probe.write_text("")
    except OSError as exc:
        raise OSError(f"output directory {out_dir} is not writable: {exc}") from exc
    probe.unlink()


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    from dataclasses import replace

    overrides = {}
    if args.dt is not None:
        overrides["dt"] = args.dt
    if getattr(args, "duration", None) is not None:
        overrides["duration"] = args.duration
    return replace(scenario, **overrides) if overrides else scenario


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="elzgrid",
        description="Phasor-domain microgrid simulation of a grid-supporting "
        "hydrogen electrolyzer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single scenario")
    p_run.add_argument("--scenario", required=True, type=Path)
    p_run.add_argument("--out", required=True, type=Path)
    p_run.add_argument("--dt", type=float, default=None)
    p_run.add_argument("--duration", type=float, default=None)

    p_study = sub.add_parser("study", help="run a four-case comparison study")
    p_study.add_argument("--config", required=True, type=Path)
    p_study.add_argument("--out", required=True, type=Path)
    p_study.add_argument("--dt", type=float, default=None)

    p_val = sub.add_parser("validate", help="validate a configuration file")
    p_val.add_argument("--scenario", required=True, type=Path)

    args = parser.parse_args(argv)

    try:
        path = args.scenario if args.command in ("run", "validate") else args.config
        parsed = parse_config_file(path)
    except (ParseError, ValidationError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print(f"{path}: valid {parsed.kind} configuration")
        return 0

    try:
        _check_writable(args.out)
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        scenario = _apply_overrides(parsed.scenario, args)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "run":
            trace, metrics = run(scenario)
            for p in emit_outputs(
                trace, metrics, args.out, resolved_config=parsed.resolved
            ):
                print(p)
        else:
            result = run_study(scenario)
            for p in emit_study_outputs(result, args.out, parsed.resolved):
                print(p)
            for case, msg in result.errors.items():
                print(f"case {case} failed: {msg}", file=sys.stderr)
            if len(result.errors) == len(CASE_NAMES):
                return 3
    except _SIM_ERRORS as exc:
        t = getattr(exc, "sim_time", float("nan"))
        print(
            f"simulation error: {type(exc).__name__} at t={t:.6f} s: {exc}",
            file=sys.stderr,
        )
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
