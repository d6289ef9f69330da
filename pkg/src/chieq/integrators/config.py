"""Shared stepper configuration and failure type."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..spectral import ConfigError

__all__ = ["StepperConfig", "ConvergenceError"]

STAGE_SOLVERS = ("fixed_point", "newton")


class ConvergenceError(RuntimeError):
    """An implicit solve failed to converge or produced non-finite values."""


@dataclass(frozen=True)
class StepperConfig:
    """Knobs shared by all implicit steppers.

    Attributes
    ----------
    tau : float
        Step size.  Nonzero; negative values are allowed so single steps can
        be run backwards in time-symmetry checks, though the integration
        driver itself only accepts positive steps.
    stage_tol : float
        Sup-norm tolerance on the residual of the implicit stage equations.
    max_iters : int
        Iteration budget for the stage solve.
    damping : float
        Relaxation factor in ``(0, 1]`` for the fixed-point update; 1 is the
        plain iteration.
    stage_solver : str
        ``"fixed_point"`` (default) or ``"newton"``, a simplified Newton
        iteration with the Jacobian frozen at the step's initial state for
        step sizes where the contraction is too weak.
    """

    tau: float
    stage_tol: float = 1e-13
    max_iters: int = 200
    damping: float = 1.0
    stage_solver: str = "fixed_point"

    def __post_init__(self) -> None:
        if not (np.isfinite(self.tau) and self.tau != 0.0):
            raise ConfigError(f"step size must be finite and nonzero, got tau={self.tau!r}")
        if not (np.isfinite(self.stage_tol) and self.stage_tol > 0.0):
            raise ConfigError(f"stage tolerance must be positive, got {self.stage_tol!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigError(f"iteration budget must be a positive integer, got {self.max_iters!r}")
        if not (0.0 < self.damping <= 1.0):
            raise ConfigError(f"damping must lie in (0, 1], got {self.damping!r}")
        if self.stage_solver not in STAGE_SOLVERS:
            raise ConfigError(
                f"unknown stage solver {self.stage_solver!r}, expected one of {STAGE_SOLVERS}"
            )
