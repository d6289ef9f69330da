"""Command-line interface.

Five subcommands cover the experiment workflows:

- ``run``: integrate each cell, write invariant samples and the final
  solution profile;
- ``converge``: error-versus-step table against the cached reference;
- ``invariants``: invariant drift tables for long-run figures;
- ``frontier``: wall-time-versus-error samples;
- ``reference``: build (or load) the cached reference and export it.

Every invocation writes a fully resolved ``config.json`` next to its
outputs; tables go to CSV (default) or JSON with full float precision.
Exit code 0 means every requested cell completed; failures are summarized
in ``failures.json`` and exit with 1, bad configuration exits with 2.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import experiments as xp
from .integrators import ConvergenceError
from .model import InvariantRecord
from .spectral import ConfigError, make_grid

__all__ = ["build_parser", "parse_config", "main", "emit"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit(path: Path, fmt: str, header: list[str], rows: list[tuple]) -> None:
    """Write a table of result rows as CSV or JSON.

    CSV cells carry floats with 17 significant digits so values round-trip
    exactly; the JSON form is a list of objects with the same keys.
    """
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format {fmt!r}")
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows([_fmt(v) for v in row] for row in rows)
    else:
        payload = [dict(zip(header, row)) for row in rows]
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")


def invariant_rows(records) -> tuple[list[str], list[tuple]]:
    header = ["t", "mass", "momentum", "hamiltonian", "quad_energy"]
    rows = [(r.t, r.mass, r.momentum, r.hamiltonian, r.quad_energy) for r in records]
    return header, rows


def convergence_rows(report: xp.ConvergenceReport) -> tuple[list[str], list[tuple]]:
    header = ["scheme", "tau", "linf_error", "rate"]
    rows = [(r.scheme, r.tau, r.linf_error, r.rate) for r in report.rows]
    return header, rows


def frontier_rows(rows: list[xp.FrontierRow]) -> tuple[list[str], list[tuple]]:
    header = ["scheme", "tau", "linf_error", "seconds"]
    return header, [(r.scheme, r.tau, r.linf_error, r.seconds) for r in rows]


def profile_rows(nodes: np.ndarray, u: np.ndarray) -> tuple[list[str], list[tuple]]:
    header = ["x", "u"]
    return header, [(float(x), float(v)) for x, v in zip(nodes, u)]


@dataclass
class RunConfig:
    """Fully resolved invocation: subcommand, scenario and output options."""

    command: str
    scenario: xp.Scenario
    out: Path
    fmt: str
    cache_dir: Path | None
    workers: int
    repeats: int
    gnuplot: bool


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chieq",
        description="Energy-preserving pseudo-spectral runs of the Camassa-Holm equation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = [
        ("run", "integrate cells, write invariant samples and final profiles"),
        ("converge", "error vs step size against the cached reference"),
        ("invariants", "invariant drift tables for long runs"),
        ("frontier", "wall time vs error samples"),
        ("reference", "build and export the cached reference solution"),
    ]
    for name, help_text in specs:
        cmd = sub.add_parser(name, help=help_text)
        source = cmd.add_mutually_exclusive_group(required=True)
        source.add_argument("--preset", choices=xp.PRESET_NAMES, help="built-in scenario")
        source.add_argument("--scenario", type=Path, help="scenario JSON file")
        cmd.add_argument(
            "--scheme",
            action="append",
            help="replace the scenario's schemes (repeatable)",
        )
        cmd.add_argument(
            "--tau",
            help="replace the scenario's step sizes: comma-separated, fractions allowed (1/800)",
        )
        cmd.add_argument("--N", type=int, help="override node count")
        cmd.add_argument("--T", type=float, help="override final time")
        cmd.add_argument("--cadence", type=int, help="record every CADENCE steps")
        cmd.add_argument("--stage-tol", type=float, help="override stage tolerance")
        cmd.add_argument("--full-scale", action="store_true", help="full-size three-peakon run")
        cmd.add_argument("--out", type=Path, default=Path("chieq-out"), help="output directory")
        cmd.add_argument("--format", choices=("csv", "json"), default="csv")
        cmd.add_argument("--cache-dir", type=Path, help="reference cache directory")
        cmd.add_argument("--workers", type=int, default=1, help="parallel cells (studies only)")
        cmd.add_argument(
            "--gnuplot-script", action="store_true", help="also write a plot.gp for the outputs"
        )
        if name == "frontier":
            cmd.add_argument("--repeats", type=int, default=3, help="timing repetitions per cell")
    return parser


def _parse_taus(text: str) -> list[float]:
    taus = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            taus.append(float(Fraction(part)) if "/" in part else float(part))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad step size {part!r}: {exc}") from exc
    if not taus:
        raise ConfigError(f"no step sizes in {text!r}")
    return taus


def _load_scenario_file(path: Path) -> xp.Scenario:
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file {path} is not valid JSON: {exc}") from exc
    try:
        cells = [xp.Cell(c["scheme"], float(c["tau"])) for c in raw["cells"]]
        return xp.make_scenario(
            raw.get("name", path.stem),
            raw["a"],
            raw["L"],
            raw["N"],
            raw["ic"],
            raw.get("ic_params", {}),
            raw["T"],
            cells,
            cadence=raw.get("cadence"),
            stage_tol=raw.get("stage_tol"),
        )
    except KeyError as exc:
        raise ConfigError(f"scenario file {path} is missing field {exc}") from exc


def _apply_overrides(scenario: xp.Scenario, ns: argparse.Namespace) -> xp.Scenario:
    schemes = ns.scheme
    if schemes is None:
        seen = []
        for cell in scenario.cells:
            if cell.scheme not in seen:
                seen.append(cell.scheme)
        schemes = seen
    if ns.tau is not None:
        taus = {scheme: _parse_taus(ns.tau) for scheme in schemes}
    else:
        taus = {
            scheme: [c.tau for c in scenario.cells if c.scheme == scheme] for scheme in schemes
        }
        for scheme in schemes:
            if not taus[scheme]:
                raise ConfigError(
                    f"scheme {scheme!r} is not in scenario {scenario.name!r};"
                    " pass --tau to give it step sizes"
                )
    cells = [xp.Cell(s, t) for s in schemes for t in taus[s]]
    return xp.make_scenario(
        scenario.name,
        scenario.a,
        scenario.L,
        ns.N if ns.N is not None else scenario.N,
        scenario.ic,
        dict(scenario.ic_params),
        ns.T if ns.T is not None else scenario.T,
        cells,
        cadence=ns.cadence if ns.cadence is not None else scenario.cadence,
        stage_tol=ns.stage_tol if ns.stage_tol is not None else scenario.stage_tol,
    )


def parse_config(argv=None) -> RunConfig:
    """Parse arguments and resolve them into a validated run configuration."""
    ns = build_parser().parse_args(argv)
    if ns.scenario is not None:
        base = _load_scenario_file(ns.scenario)
    else:
        base = xp.preset(ns.preset, full_scale=ns.full_scale)
    scenario = _apply_overrides(base, ns)
    if ns.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {ns.workers}")
    return RunConfig(
        command=ns.command,
        scenario=scenario,
        out=ns.out,
        fmt=ns.format,
        cache_dir=ns.cache_dir,
        workers=ns.workers,
        repeats=getattr(ns, "repeats", 3),
        gnuplot=ns.gnuplot_script,
    )


def _config_payload(rc: RunConfig) -> dict:
    scenario = {
        "name": rc.scenario.name,
        "a": rc.scenario.a,
        "L": rc.scenario.L,
        "N": rc.scenario.N,
        "ic": rc.scenario.ic,
        "ic_params": dict(rc.scenario.ic_params),
        "T": rc.scenario.T,
        "cells": [{"scheme": c.scheme, "tau": c.tau} for c in rc.scenario.cells],
        "cadence": rc.scenario.cadence,
        "stage_tol": rc.scenario.stage_tol,
    }
    return {
        "command": rc.command,
        "scenario": scenario,
        "out": str(rc.out),
        "format": rc.fmt,
        "cache_dir": None if rc.cache_dir is None else str(rc.cache_dir),
        "workers": rc.workers,
        "repeats": rc.repeats,
        "reference": {"scheme": xp.REFERENCE_SCHEME, "tau": xp.REFERENCE_TAU},
    }


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _cell_tag(cell: xp.Cell) -> str:
    return f"{cell.scheme}_tau{cell.tau:g}"


def _gnuplot_preamble(title: str) -> list[str]:
    return [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
    ]


def _cmd_run(rc: RunConfig) -> list[dict]:
    failures = []
    produced = []
    grid = make_grid(rc.scenario.a, rc.scenario.L, rc.scenario.N)
    ext = rc.fmt
    for cell in rc.scenario.cells:
        tag = _cell_tag(cell)
        try:
            traj = xp.run_cell(rc.scenario, cell)
        except ConvergenceError as exc:
            failures.append({"scheme": cell.scheme, "tau": cell.tau, "error": str(exc)})
            continue
        header, rows = invariant_rows(traj.records)
        emit(rc.out / f"invariants_{tag}.{ext}", rc.fmt, header, rows)
        header, rows = profile_rows(grid.nodes, traj.state.u)
        emit(rc.out / f"final_{tag}.{ext}", rc.fmt, header, rows)
        produced.append(tag)
    if rc.gnuplot and produced and ext == "csv":
        lines = _gnuplot_preamble(f"{rc.scenario.name}: final profiles")
        plots = ", ".join(f"'final_{tag}.csv' using 1:2 with lines" for tag in produced)
        lines += ["set terminal pngcairo", "set output 'final.png'", f"plot {plots}"]
        (rc.out / "plot.gp").write_text("\n".join(lines) + "\n")
    return failures


def _cmd_converge(rc: RunConfig) -> list[dict]:
    report = xp.convergence_study(rc.scenario, cache_dir=rc.cache_dir, workers=rc.workers)
    header, rows = convergence_rows(report)
    emit(rc.out / f"convergence.{rc.fmt}", rc.fmt, header, rows)
    print(f"{'scheme':<8} {'tau':>12} {'linf_error':>14} {'rate':>7}")
    for row in report.rows:
        rate = "" if row.rate is None else f"{row.rate:.2f}"
        note = " (roundoff)" if row.roundoff else ""
        print(f"{row.scheme:<8} {row.tau:>12.6g} {row.linf_error:>14.3e} {rate:>7}{note}")
    if rc.gnuplot and rc.fmt == "csv":
        lines = _gnuplot_preamble(f"{rc.scenario.name}: error vs step size")
        lines += [
            "set logscale xy",
            "set terminal pngcairo",
            "set output 'convergence.png'",
            "plot 'convergence.csv' using 2:3 with points pt 7",
        ]
        (rc.out / "plot.gp").write_text("\n".join(lines) + "\n")
    return [
        {"scheme": r.scheme, "tau": r.tau, "error": "diverged"}
        for r in report.rows
        if r.status != "ok"
    ]


def _cmd_invariants(rc: RunConfig) -> list[dict]:
    failures = []
    produced = []
    for s in xp.invariant_drift_study(rc.scenario, workers=rc.workers):
        if s.status != "ok":
            failures.append({"scheme": s.scheme, "tau": s.tau, "error": s.detail})
            continue
        tag = _cell_tag(xp.Cell(s.scheme, s.tau))
        header, rows = invariant_rows(s.drifts)
        emit(rc.out / f"drift_{tag}.{rc.fmt}", rc.fmt, header, rows)
        produced.append(tag)
    if rc.gnuplot and produced and rc.fmt == "csv":
        lines = _gnuplot_preamble(f"{rc.scenario.name}: invariant drift")
        lines += ["set logscale y", "set terminal pngcairo", "set output 'drift.png'"]
        plots = ", ".join(
            f"'drift_{tag}.csv' using 1:5 with lines title '{tag}'" for tag in produced
        )
        lines.append(f"plot {plots}")
        (rc.out / "plot.gp").write_text("\n".join(lines) + "\n")
    return failures


def _cmd_frontier(rc: RunConfig) -> list[dict]:
    rows = xp.cpu_frontier_study(rc.scenario, cache_dir=rc.cache_dir, repeats=rc.repeats)
    header, table = frontier_rows(rows)
    emit(rc.out / f"frontier.{rc.fmt}", rc.fmt, header, table)
    return []


def _cmd_reference(rc: RunConfig) -> list[dict]:
    ref = xp.make_reference(rc.scenario, cache_dir=rc.cache_dir)
    grid = make_grid(rc.scenario.a, rc.scenario.L, rc.scenario.N)
    header, rows = profile_rows(grid.nodes, ref)
    emit(rc.out / f"reference.{rc.fmt}", rc.fmt, header, rows)
    cache = xp.resolve_cache_dir(rc.cache_dir) / f"reference-{xp.reference_key(rc.scenario)}.npy"
    print(f"reference cached at {cache}")
    return []


_COMMANDS = {
    "run": _cmd_run,
    "converge": _cmd_converge,
    "invariants": _cmd_invariants,
    "frontier": _cmd_frontier,
    "reference": _cmd_reference,
}


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    try:
        rc = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        rc.out.mkdir(parents=True, exist_ok=True)
        _write_json(rc.out / "config.json", _config_payload(rc))
        failures = _COMMANDS[rc.command](rc)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if failures:
        _write_json(rc.out / "failures.json", {"failures": failures})
        for item in failures:
            print(
                f"failed: {item['scheme']} tau={item['tau']:g}: {item['error']}",
                file=sys.stderr,
            )
        return 1
    return 0
