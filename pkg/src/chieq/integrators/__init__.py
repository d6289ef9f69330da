"""Implicit time integrators preserving the quadratized energy."""

from .config import ConvergenceError, StepperConfig
from .driver import Trajectory, integrate, parse_scheme, steps_for
from .gauss import gauss_step
from .lcns import lcns_bootstrap, lcns_step
from .tableau import GaussTableau, gauss_tableau

__all__ = [
    "ConvergenceError",
    "StepperConfig",
    "Trajectory",
    "integrate",
    "parse_scheme",
    "steps_for",
    "gauss_step",
    "lcns_bootstrap",
    "lcns_step",
    "GaussTableau",
    "gauss_tableau",
]
