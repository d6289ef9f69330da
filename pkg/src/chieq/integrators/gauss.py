"""Gauss collocation stepper for the auxiliary-variable system.

One step solves the stage equations ``K_i = f(y_n + tau sum_j A_ij K_j)``
for the slopes of both fields and updates ``y_{n+1} = y_n + tau sum_i b_i K_i``.
Because the tableau is algebraically stable and the conserved functional is
a plain bilinear form of the state, every converged step preserves
``h sum_j u_j q_j`` up to the stage tolerance.

The default stage solver is damped fixed-point iteration seeded with the
slope at the step's starting state; a simplified Newton iteration with the
Jacobian frozen at that state is available for step sizes where the
fixed-point map stops contracting.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..model import State, rhs_ieq
from ..spectral import SpectralOps, apply_D, apply_d1
from .config import ConvergenceError, StepperConfig
from .tableau import GaussTableau

__all__ = ["gauss_step"]

# Iterations whose residual stops halving are cycling on roundoff noise; if
# that happens within this factor of the requested tolerance there are no
# more digits to be had in double precision and the solve is accepted.
STALL_SWEEPS = 10
STALL_GUARD = 1e3


def gauss_step(ops: SpectralOps, tab: GaussTableau, cfg: StepperConfig, state: State) -> State:
    """Advance ``state`` by one step of the ``tab.s``-stage Gauss method."""
    u0 = np.asarray(state.u, dtype=float)
    q0 = np.asarray(state.q, dtype=float)
    if cfg.stage_solver == "newton":
        Ku, Kq = _stages_newton(ops, tab, cfg, u0, q0)
    else:
        Ku, Kq = _stages_fixed_point(ops, tab, cfg, u0, q0)
    u1 = u0 + cfg.tau * (tab.b @ Ku)
    q1 = q0 + cfg.tau * (tab.b @ Kq)
    if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(q1))):
        raise ConvergenceError("non-finite state after Gauss step")
    return State(u=u1, q=q1)


def _stages_fixed_point(ops, tab, cfg, u0, q0):
    du, dq = rhs_ieq(ops, u0, q0)
    Ku = np.tile(du, (tab.s, 1))
    Kq = np.tile(dq, (tab.s, 1))
    tauA = cfg.tau * tab.A
    w = cfg.damping
    best = np.inf
    stall = 0
    res = np.inf
    for _ in range(cfg.max_iters):
        Fu, Fq = rhs_ieq(ops, u0 + tauA @ Ku, q0 + tauA @ Kq)
        res = max(float(np.max(np.abs(Fu - Ku))), float(np.max(np.abs(Fq - Kq))))
        if not np.isfinite(res):
            raise ConvergenceError("stage iteration produced non-finite values")
        if w == 1.0:
            Ku, Kq = Fu, Fq
        else:
            Ku = Ku + w * (Fu - Ku)
            Kq = Kq + w * (Fq - Kq)
        if res <= cfg.stage_tol:
            return Ku, Kq
        if res < 0.5 * best:
            stall = 0
        else:
            stall += 1
            if stall >= STALL_SWEEPS and best <= STALL_GUARD * cfg.stage_tol:
                return Ku, Kq
        best = min(best, res)
    raise ConvergenceError(
        f"stage iteration stalled at residual {res:.3e}"
        f" after {cfg.max_iters} iterations (tol {cfg.stage_tol:.1e})"
    )


def _stages_newton(ops, tab, cfg, u0, q0):
    n = ops.grid.N
    s = tab.s
    du, dq = rhs_ieq(ops, u0, q0)
    jac = _rhs_jacobian(ops, u0, du)
    lu = lu_factor(np.eye(2 * n * s) - cfg.tau * np.kron(tab.A, jac))

    K = np.tile(np.concatenate([du, dq]), (s, 1))
    y0 = np.concatenate([u0, q0])
    tauA = cfg.tau * tab.A
    best = np.inf
    stall = 0
    res = np.inf
    for _ in range(cfg.max_iters):
        Y = y0 + tauA @ K
        Fu, Fq = rhs_ieq(ops, Y[:, :n], Y[:, n:])
        R = K - np.concatenate([Fu, Fq], axis=1)
        res = float(np.max(np.abs(R)))
        if not np.isfinite(res):
            raise ConvergenceError("Newton stage iteration produced non-finite values")
        if res <= cfg.stage_tol:
            return K[:, :n], K[:, n:]
        if res < 0.5 * best:
            stall = 0
        else:
            stall += 1
            if stall >= STALL_SWEEPS and best <= STALL_GUARD * cfg.stage_tol:
                return K[:, :n], K[:, n:]
        best = min(best, res)
        K = K - lu_solve(lu, R.ravel()).reshape(s, 2 * n)
    raise ConvergenceError(
        f"Newton stage iteration stalled at residual {res:.3e}"
        f" after {cfg.max_iters} iterations (tol {cfg.stage_tol:.1e})"
    )


def _rhs_jacobian(ops: SpectralOps, u: np.ndarray, du: np.ndarray) -> np.ndarray:
    """Dense Jacobian of the auxiliary-variable right-hand side at ``(u, q)``.

    Only used by the simplified Newton solver, where it is built once per
    step; ``du`` is the precomputed ``u``-slope at the base state (the only
    way ``q`` enters the linearization).
    """
    n = ops.grid.N
    eye = np.eye(n)
    D1 = apply_d1(ops, eye).T
    D = apply_D(ops, eye).T
    d1u = apply_d1(ops, u)
    d1du = apply_d1(ops, du)

    # d(du)/du = D(-2 u . + D1(u D1 . + d1u .)),   d(du)/dq = D
    B = D @ (-2.0 * u[:, None] * eye + D1 @ (u[:, None] * D1 + np.diag(d1u)))
    # dq = -u du - d1u D1(du), differentiated through du
    E = -np.diag(du) - u[:, None] * B - d1du[:, None] * D1 - d1u[:, None] * (D1 @ B)
    G = (-u[:, None] * eye - d1u[:, None] * D1) @ D
    return np.block([[B, D], [E, G]])
