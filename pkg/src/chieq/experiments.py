"""Experiment harness: named scenarios, cached references, studies.

A scenario bundles a grid, an initial condition, a final time and the
(scheme, step size) cells to run on it.  The three studies built on top:

- ``convergence_study``: sup-norm errors against a cached high-order
  reference, with observed orders between consecutive step sizes;
- ``invariant_drift_study``: absolute drift of the four tracked invariants
  along each run;
- ``cpu_frontier_study``: wall-clock seconds versus final error, the data
  behind work-precision plots.

References are computed once per (grid, initial data, final time) with the
three-stage Gauss method at a small fixed step and cached on disk under a
content hash, so repeated studies and test runs reuse them.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .integrators import ConvergenceError, StepperConfig, Trajectory, integrate, parse_scheme, steps_for
from .model import InvariantRecord, State, peakon_ic, three_peakon_ic
from .spectral import ConfigError, Grid, SpectralOps, build_ops, make_grid

__all__ = [
    "Cell",
    "Scenario",
    "make_scenario",
    "preset",
    "PRESET_NAMES",
    "initial_state",
    "build_initial_field",
    "run_cell",
    "resolve_cache_dir",
    "reference_key",
    "make_reference",
    "linf_error",
    "ConvergenceRow",
    "ConvergenceReport",
    "convergence_rates",
    "convergence_study",
    "DriftSeries",
    "invariant_drift_study",
    "FrontierRow",
    "cpu_frontier_study",
    "local_maxima",
    "unwrap_track",
    "REFERENCE_SCHEME",
    "REFERENCE_TAU",
    "ROUNDOFF_FLOOR",
]

REFERENCE_SCHEME = "gauss6"
REFERENCE_TAU = 1e-3
REFERENCE_STAGE_TOL = 1e-13
# errors below this are dominated by accumulated roundoff, not truncation;
# observed orders computed from them are flagged as unreliable
ROUNDOFF_FLOOR = 1e-12

IC_KINDS = ("sine", "peakon", "three_peakon")


@dataclass(frozen=True)
class Cell:
    """One (scheme, step size) combination of a scenario."""

    scheme: str
    tau: float


@dataclass(frozen=True)
class Scenario:
    """A fully specified experiment: grid, initial data, horizon, cells."""

    name: str
    a: float
    L: float
    N: int
    ic: str
    ic_params: tuple
    T: float
    cells: tuple[Cell, ...]
    cadence: int | None = None
    stage_tol: float | None = None


def _freeze(value):
    if isinstance(value, (list, tuple)):
        return tuple(_freeze(v) for v in value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def make_scenario(
    name: str,
    a: float,
    L: float,
    N: int,
    ic: str,
    ic_params: dict,
    T: float,
    cells: Sequence[Cell | tuple],
    cadence: int | None = None,
    stage_tol: float | None = None,
) -> Scenario:
    """Validate and freeze a scenario definition.

    Checks that the grid is constructible, the initial condition is known,
    every cell's scheme parses, and every step size divides ``T`` into an
    integer number of steps.
    """
    make_grid(a, L, N)
    if ic not in IC_KINDS:
        raise ConfigError(f"unknown initial condition {ic!r}, expected one of {IC_KINDS}")
    if not cells:
        raise ConfigError("scenario needs at least one (scheme, tau) cell")
    frozen_cells = []
    for cell in cells:
        if not isinstance(cell, Cell):
            cell = Cell(*cell)
        parse_scheme(cell.scheme)
        steps_for(T, cell.tau)
        frozen_cells.append(Cell(cell.scheme, float(cell.tau)))
    params = tuple(sorted((str(k), _freeze(v)) for k, v in dict(ic_params).items()))
    scenario = Scenario(
        name=str(name),
        a=float(a),
        L=float(L),
        N=int(N),
        ic=ic,
        ic_params=params,
        T=float(T),
        cells=tuple(frozen_cells),
        cadence=cadence,
        stage_tol=stage_tol,
    )
    try:
        build_initial_field(scenario, make_grid(a, L, N))  # param sanity
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for initial condition {ic!r}: {exc}") from exc
    return scenario


PRESET_NAMES = ("sine", "peakon", "three-peakon")


def preset(name: str, full_scale: bool = False) -> Scenario:
    """Ready-made scenarios behind the command-line presets.

    ``sine``: smooth data on ``[0, 2 pi)`` to ``T = 1``, the convergence
    sweep (second-order scheme over 1/100..1/800, fourth/sixth order Gauss
    over 1/30..1/120).  ``peakon``: a unit peakon on a period-1 domain run
    to ``T = 50`` with all four schemes, the long-time invariant study.
    ``three-peakon``: interacting peakons of speeds 2/1/0.8 on a period-30
    domain; ``full_scale`` doubles the grid to N = 2048 and extends the
    horizon to ``T = 10``.
    """
    if name == "sine":
        cells = [Cell("lcns", 1.0 / m) for m in (100, 200, 400, 800)]
        cells += [Cell(s, 1.0 / m) for s in ("gauss4", "gauss6") for m in (30, 60, 120)]
        return make_scenario("sine", 0.0, 2.0 * np.pi, 128, "sine", {}, 1.0, cells)
    if name == "peakon":
        cells = [Cell(s, 1e-4) for s in ("lcns", "gauss2", "gauss4", "gauss6")]
        return make_scenario(
            "peakon", 0.0, 1.0, 128, "peakon", {"c": 1.0, "x0": 0.0}, 50.0, cells
        )
    if name == "three-peakon":
        n = 2048 if full_scale else 1024
        T = 10.0 if full_scale else 4.0
        return make_scenario(
            "three-peakon",
            0.0,
            30.0,
            n,
            "three_peakon",
            {"speeds": (2.0, 1.0, 0.8), "centers": (-5.0, -3.0, -1.0)},
            T,
            [Cell("gauss4", 1e-4)],
        )
    raise ConfigError(f"unknown preset {name!r}, expected one of {PRESET_NAMES}")


def build_initial_field(scenario: Scenario, grid: Grid) -> np.ndarray:
    """Nodal values of the scenario's initial condition on ``grid``."""
    params = dict(scenario.ic_params)
    if scenario.ic == "sine":
        return np.sin(grid.nodes)
    if scenario.ic == "peakon":
        return peakon_ic(grid, params["c"], params["x0"])
    if scenario.ic == "three_peakon":
        return three_peakon_ic(grid, params["speeds"], params["centers"])
    raise ConfigError(f"unknown initial condition {scenario.ic!r}")


def initial_state(scenario: Scenario) -> tuple[Grid, SpectralOps, State]:
    """Grid, operators and consistent initial state of a scenario."""
    grid = make_grid(scenario.a, scenario.L, scenario.N)
    ops = build_ops(grid)
    return grid, ops, State.from_initial(ops, build_initial_field(scenario, grid))


def _cell_config(scenario: Scenario, cell: Cell) -> StepperConfig:
    if scenario.stage_tol is None:
        return StepperConfig(tau=cell.tau)
    return StepperConfig(tau=cell.tau, stage_tol=scenario.stage_tol)


def run_cell(
    scenario: Scenario,
    cell: Cell,
    sampler: Callable[[float, State], Any] | None = None,
    cadence: int | None = None,
) -> Trajectory:
    """Integrate one cell of a scenario from its initial state."""
    _, ops, s0 = initial_state(scenario)
    return integrate(
        cell.scheme,
        ops,
        _cell_config(scenario, cell),
        s0,
        scenario.T,
        cadence=cadence if cadence is not None else scenario.cadence,
        sampler=sampler,
    )


def _map_cells(cells, fn, workers: int):
    if workers <= 1:
        return [fn(cell) for cell in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


# --- reference solutions ---------------------------------------------------


def resolve_cache_dir(cache_dir: str | Path | None = None) -> Path:
    """Cache directory: explicit argument, else $CH_CACHE_DIR, else ~/.cache/chieq."""
    if cache_dir is not None:
        return Path(cache_dir)
    env = os.environ.get("CH_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "chieq"


def reference_key(scenario: Scenario) -> str:
    """Content hash naming the reference run for a scenario's grid and data."""
    payload = {
        "a": scenario.a,
        "L": scenario.L,
        "N": scenario.N,
        "ic": scenario.ic,
        "ic_params": scenario.ic_params,
        "T": scenario.T,
        "scheme": REFERENCE_SCHEME,
        "tau": REFERENCE_TAU,
        "stage_tol": REFERENCE_STAGE_TOL,
    }
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
    return digest[:16]


def make_reference(scenario: Scenario, cache_dir: str | Path | None = None) -> np.ndarray:
    """Reference solution ``u(T)`` on the scenario's grid, cached on disk.

    Computed with the three-stage Gauss method at ``tau = 1e-3``; for the
    smooth scenarios this is accurate to accumulated roundoff, far below
    any error measured against it.
    """
    directory = resolve_cache_dir(cache_dir)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"reference-{reference_key(scenario)}.npy"
    if path.exists():
        ref = np.load(path)
        if ref.shape == (scenario.N,):
            return ref

    _, ops, s0 = initial_state(scenario)
    cfg = StepperConfig(tau=REFERENCE_TAU, stage_tol=REFERENCE_STAGE_TOL)
    traj = integrate(REFERENCE_SCHEME, ops, cfg, s0, scenario.T)
    ref = np.asarray(traj.state.u)

    # write-then-rename so concurrent runs never observe a partial file
    fd, tmp = tempfile.mkstemp(dir=directory, prefix="ref-tmp-", suffix=".npy")
    os.close(fd)
    np.save(tmp, ref)
    os.replace(tmp, path)
    return ref


def linf_error(u: np.ndarray, ref: np.ndarray) -> float:
    """Sup-norm difference of two nodal fields."""
    u = np.asarray(u)
    ref = np.asarray(ref)
    if u.shape != ref.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {ref.shape}")
    return float(np.max(np.abs(u - ref)))


# --- studies ----------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    """One cell of a convergence table."""

    scheme: str
    tau: float
    linf_error: float
    rate: float | None
    status: str
    roundoff: bool


@dataclass(frozen=True)
class ConvergenceReport:
    scenario: str
    rows: tuple[ConvergenceRow, ...]


def convergence_rates(taus: Sequence[float], errors: Sequence[float]) -> list[float | None]:
    """Observed orders between consecutive (tau, error) pairs.

    ``rate_k = ln(e_{k-1}/e_k) / ln(tau_{k-1}/tau_k)``; the first entry and
    any entry involving a non-finite or non-positive error is None.
    """
    if len(taus) != len(errors):
        raise ValueError(f"got {len(taus)} step sizes but {len(errors)} errors")
    rates: list[float | None] = [None]
    for k in range(1, len(taus)):
        e0, e1 = errors[k - 1], errors[k]
        usable = (
            np.isfinite(e0) and np.isfinite(e1) and e0 > 0.0 and e1 > 0.0 and taus[k] != taus[k - 1]
        )
        rates.append(float(np.log(e0 / e1) / np.log(taus[k - 1] / taus[k])) if usable else None)
    return rates


def convergence_study(
    scenario: Scenario,
    cache_dir: str | Path | None = None,
    workers: int = 1,
) -> ConvergenceReport:
    """Errors at ``T`` against the cached reference for every cell.

    Cells that fail to converge are reported with a nan error and status
    ``"diverged"`` instead of aborting the sweep.  Observed orders are
    computed between consecutive cells of the same scheme, in the order the
    scenario lists them.
    """
    ref = make_reference(scenario, cache_dir)

    def run(cell: Cell) -> tuple[float, str]:
        try:
            traj = run_cell(scenario, cell)
            return linf_error(traj.state.u, ref), "ok"
        except ConvergenceError:
            return float("nan"), "diverged"

    outcomes = _map_cells(scenario.cells, run, workers)

    by_scheme: dict[str, list[int]] = {}
    for i, cell in enumerate(scenario.cells):
        by_scheme.setdefault(cell.scheme, []).append(i)
    rates: list[float | None] = [None] * len(scenario.cells)
    for scheme, idx in by_scheme.items():
        taus = [scenario.cells[i].tau for i in idx]
        errs = [outcomes[i][0] for i in idx]
        for i, rate in zip(idx, convergence_rates(taus, errs)):
            rates[i] = rate

    rows = tuple(
        ConvergenceRow(
            scheme=cell.scheme,
            tau=cell.tau,
            linf_error=err,
            rate=rates[i],
            status=status,
            roundoff=bool(np.isfinite(err) and err < ROUNDOFF_FLOOR),
        )
        for i, (cell, (err, status)) in enumerate(zip(scenario.cells, outcomes))
    )
    return ConvergenceReport(scenario=scenario.name, rows=rows)


@dataclass(frozen=True)
class DriftSeries:
    """Invariant samples of one run plus their drift from the initial values.

    ``drifts`` reuses the record type: each row holds ``|X(t) - X(0)|`` per
    invariant at the sample time.  A cell whose run failed is reported with
    empty tuples, status ``"diverged"`` and the failure message in
    ``detail``.
    """

    scheme: str
    tau: float
    records: tuple[InvariantRecord, ...]
    drifts: tuple[InvariantRecord, ...]
    status: str = "ok"
    detail: str = ""


def drift_rows(records: Sequence[InvariantRecord]) -> tuple[InvariantRecord, ...]:
    """Absolute drift of each invariant relative to the first record."""
    if not records:
        return ()
    base = records[0]
    return tuple(
        InvariantRecord(
            t=r.t,
            mass=abs(r.mass - base.mass),
            momentum=abs(r.momentum - base.momentum),
            hamiltonian=abs(r.hamiltonian - base.hamiltonian),
            quad_energy=abs(r.quad_energy - base.quad_energy),
        )
        for r in records
    )


def invariant_drift_study(scenario: Scenario, workers: int = 1) -> list[DriftSeries]:
    """Run every cell and return invariant samples and drifts.

    Failed cells are reported in place rather than aborting the study.
    """

    def run(cell: Cell) -> DriftSeries:
        try:
            traj = run_cell(scenario, cell)
        except ConvergenceError as exc:
            return DriftSeries(cell.scheme, cell.tau, (), (), "diverged", str(exc))
        records = tuple(traj.records)
        return DriftSeries(cell.scheme, cell.tau, records, drift_rows(records))

    return _map_cells(scenario.cells, run, workers)


@dataclass(frozen=True)
class FrontierRow:
    """Cost/accuracy sample: best wall time and final error of one cell."""

    scheme: str
    tau: float
    linf_error: float
    seconds: float


def cpu_frontier_study(
    scenario: Scenario,
    cache_dir: str | Path | None = None,
    repeats: int = 3,
) -> list[FrontierRow]:
    """Best-of-``repeats`` wall time against final error for every cell.

    Cells run sequentially so timings do not contend for cores; the
    reference is built (and cached) before any clock starts.
    """
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")
    ref = make_reference(scenario, cache_dir)
    rows = []
    for cell in scenario.cells:
        # record only the endpoints; mid-run sampling would pollute timings
        m = steps_for(scenario.T, cell.tau)
        best = np.inf
        traj = None
        for _ in range(repeats):
            start = time.perf_counter()
            traj = run_cell(scenario, cell, cadence=max(1, m))
            best = min(best, time.perf_counter() - start)
        rows.append(FrontierRow(cell.scheme, cell.tau, linf_error(traj.state.u, ref), best))
    return rows


# --- trajectory diagnostics --------------------------------------------------


def local_maxima(u: np.ndarray, threshold: float | None = None) -> np.ndarray:
    """Indices of strict cyclic local maxima, optionally at or above a threshold."""
    u = np.asarray(u)
    idx = np.nonzero((u > np.roll(u, 1)) & (u > np.roll(u, -1)))[0]
    if threshold is not None:
        idx = idx[u[idx] >= threshold]
    return idx


def unwrap_track(positions: Sequence[float], L: float) -> np.ndarray:
    """Lift a position track on a period-``L`` circle to the real line.

    Assumes consecutive samples move less than ``L/2``, so each jump has an
    unambiguous shortest lift.
    """
    return np.unwrap(np.asarray(positions, dtype=float), period=float(L))
