"""Structure-preserving Fourier pseudo-spectral solvers for the Camassa-Holm equation.

The equation is evolved in an auxiliary-variable form whose energy is a
bilinear function of the state, so that Gauss collocation of any stage count
and a linearly implicit two-level scheme conserve it exactly up to solver
tolerance.  Modules: ``spectral`` (grid and derivative operators), ``model``
(dynamics, invariants, peakon data), ``integrators`` (tableaux, steppers,
driver), ``experiments`` (scenarios and studies), ``cli`` (command line).
"""

from .experiments import (
    Cell,
    ConvergenceReport,
    ConvergenceRow,
    DriftSeries,
    FrontierRow,
    Scenario,
    build_initial_field,
    convergence_rates,
    convergence_study,
    cpu_frontier_study,
    initial_state,
    invariant_drift_study,
    linf_error,
    local_maxima,
    make_reference,
    make_scenario,
    preset,
    reference_key,
    resolve_cache_dir,
    run_cell,
    unwrap_track,
)
from .integrators import (
    ConvergenceError,
    GaussTableau,
    StepperConfig,
    Trajectory,
    gauss_step,
    gauss_tableau,
    integrate,
    lcns_bootstrap,
    lcns_step,
    parse_scheme,
    steps_for,
)
from .model import (
    InvariantRecord,
    State,
    hamiltonian,
    initial_q,
    invariant_record,
    mass,
    momentum,
    peakon_ic,
    quad_energy,
    rhs_hamiltonian,
    rhs_ieq,
    three_peakon_ic,
)
from .spectral import (
    ConfigError,
    Grid,
    SpectralOps,
    apply_D,
    apply_d1,
    apply_d2,
    build_ops,
    inner,
    make_grid,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ConfigError",
    "Grid",
    "SpectralOps",
    "make_grid",
    "build_ops",
    "apply_d1",
    "apply_d2",
    "apply_D",
    "inner",
    "State",
    "InvariantRecord",
    "initial_q",
    "rhs_ieq",
    "rhs_hamiltonian",
    "mass",
    "momentum",
    "hamiltonian",
    "quad_energy",
    "invariant_record",
    "peakon_ic",
    "three_peakon_ic",
    "ConvergenceError",
    "StepperConfig",
    "GaussTableau",
    "gauss_tableau",
    "gauss_step",
    "lcns_bootstrap",
    "lcns_step",
    "Trajectory",
    "integrate",
    "parse_scheme",
    "steps_for",
    "Cell",
    "Scenario",
    "make_scenario",
    "preset",
    "build_initial_field",
    "initial_state",
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
]
