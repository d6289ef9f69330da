"""Time-integration driver: scheme names, stepping loop, invariant sampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..model import InvariantRecord, State, invariant_record
from ..spectral import ConfigError, SpectralOps
from .config import ConvergenceError, StepperConfig
from .gauss import gauss_step
from .lcns import lcns_bootstrap, lcns_step
from .tableau import gauss_tableau

__all__ = ["Trajectory", "parse_scheme", "steps_for", "integrate"]

# records-per-run target when no cadence is given; keeps long runs from
# accumulating hundreds of thousands of sample rows
AUTO_RECORDS = 2000


@dataclass
class Trajectory:
    """Result of :func:`integrate`.

    ``records`` holds invariants at the sampled steps (always including the
    initial and final states when any steps were taken); ``samples`` holds
    ``(t, sampler(t, state))`` pairs at the same times when a sampler was
    passed.
    """

    state: State
    records: list[InvariantRecord] = field(default_factory=list)
    samples: list[tuple[float, Any]] = field(default_factory=list)


def parse_scheme(name: str) -> tuple[str, int]:
    """Split a scheme name into ``("lcns", 0)`` or ``("gauss", s)``.

    Gauss methods are named by their convergence order: ``gauss2`` is the
    implicit midpoint rule, ``gauss4`` the two-stage method, and so on.
    """
    if not isinstance(name, str):
        raise ConfigError(f"scheme name must be a string, got {name!r}")
    label = name.strip().lower()
    if label == "lcns":
        return ("lcns", 0)
    if label.startswith("gauss"):
        digits = label[len("gauss"):]
        if digits.isdigit() and int(digits) >= 2 and int(digits) % 2 == 0:
            return ("gauss", int(digits) // 2)
        raise ConfigError(
            f"Gauss schemes are named by even order (gauss2, gauss4, ...), got {name!r}"
        )
    raise ConfigError(f"unknown scheme {name!r}; expected 'lcns' or 'gauss<order>'")


def steps_for(T: float, tau: float) -> int:
    """Number of steps of size ``tau`` covering ``[0, T]`` exactly."""
    if not (np.isfinite(T) and T >= 0.0):
        raise ConfigError(f"final time must be finite and >= 0, got T={T!r}")
    if not (np.isfinite(tau) and tau > 0.0):
        raise ConfigError(f"step size must be positive for integration, got tau={tau!r}")
    m = int(round(T / tau))
    if abs(m * tau - T) > 1e-9 * max(T, tau):
        raise ConfigError(f"final time T={T!r} is not an integer multiple of tau={tau!r}")
    return m


def integrate(
    scheme: str,
    ops: SpectralOps,
    cfg: StepperConfig,
    state0: State,
    T: float,
    cadence: int | None = None,
    sampler: Callable[[float, State], Any] | None = None,
) -> Trajectory:
    """Advance ``state0`` to time ``T`` with the named scheme.

    Parameters
    ----------
    scheme : str
        ``"lcns"`` or ``"gauss<order>"`` with even order.
    cadence : int, optional
        Record invariants every ``cadence`` steps (plus always at steps 0
        and M).  Default aims for about 2000 records.
    sampler : callable, optional
        ``sampler(t, state)`` evaluated at every recorded step; its return
        values are collected in ``Trajectory.samples``.

    Raises
    ------
    ConfigError
        For unknown schemes, non-positive step sizes, or when ``T`` is not
        an integer multiple of ``cfg.tau``.
    ConvergenceError
        When a step fails; the message names the failing step index.
    """
    kind, s = parse_scheme(scheme)
    m = steps_for(T, cfg.tau)
    traj = Trajectory(state=state0)
    if m == 0:
        return traj

    if cadence is None:
        cadence = max(1, m // AUTO_RECORDS)
    if int(cadence) != cadence or cadence < 1:
        raise ConfigError(f"cadence must be a positive integer, got {cadence!r}")
    cadence = int(cadence)

    def record(step: int, state: State) -> None:
        t = step * cfg.tau
        traj.records.append(invariant_record(ops, t, state))
        if sampler is not None:
            traj.samples.append((t, sampler(t, state)))

    record(0, state0)
    if kind == "gauss":
        tab = gauss_tableau(s)
        stepper = lambda prev, curr: gauss_step(ops, tab, cfg, curr)
    else:
        stepper = lambda prev, curr: (
            lcns_bootstrap(ops, cfg, curr) if prev is None else lcns_step(ops, cfg, prev, curr)
        )

    prev: State | None = None
    state = state0
    for n in range(1, m + 1):
        try:
            prev, state = state, stepper(prev, state)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"{scheme} failed at step {n} of {m} (t = {n * cfg.tau:.6g}): {exc}"
            ) from exc
        if n % cadence == 0 or n == m:
            record(n, state)

    traj.state = state
    return traj
