"""Periodic grid and Fourier pseudo-spectral differentiation operators.

Derivatives act on the trigonometric interpolant of nodal values: forward
real FFT, per-mode symbol multiplication, inverse FFT.  The first-derivative
symbol is zeroed at the Nyquist mode so that differentiation maps real fields
to real fields and the operator matrix is exactly skew-symmetric; the
second-derivative symbol keeps its Nyquist entry.  The smoothing derivative
``D = (I - D2)^-1 D1`` shares the same eigenvectors, so it is applied with a
single combined symbol and no linear solve.

Fields are plain float64 arrays whose last axis has length ``N``; leading
axes are broadcast, which lets the implicit stage solvers differentiate all
stages in one transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfigError",
    "Grid",
    "SpectralOps",
    "make_grid",
    "build_ops",
    "apply_d1",
    "apply_d2",
    "apply_D",
    "inner",
]


class ConfigError(ValueError):
    """Invalid grid, scheme, or run configuration."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic mesh on ``[a, a + L)``.

    Attributes
    ----------
    a : float
        Left endpoint of the domain.
    L : float
        Period; the right endpoint ``a + L`` is identified with ``a``.
    N : int
        Number of nodes, even and at least 4.
    h : float
        Node spacing ``L / N``.
    nodes : ndarray
        Node coordinates ``a + j h`` for ``j = 0 .. N-1``.
    """

    a: float
    L: float
    N: int
    h: float
    nodes: np.ndarray

    @property
    def mu(self) -> float:
        """Fundamental wavenumber ``2 pi / L``."""
        return 2.0 * np.pi / self.L


def make_grid(a: float, L: float, N: int) -> Grid:
    """Build the uniform periodic grid with ``N`` nodes on ``[a, a + L)``.

    Parameters
    ----------
    a : float
        Left endpoint.
    L : float
        Period, must be positive.
    N : int
        Node count, must be even and at least 4 so the Nyquist mode is
        well defined and separated from mode zero.
    """
    if not np.isfinite(a):
        raise ConfigError(f"domain endpoint must be finite, got a={a!r}")
    if not (np.isfinite(L) and L > 0):
        raise ConfigError(f"period must be positive and finite, got L={L!r}")
    if int(N) != N:
        raise ConfigError(f"node count must be an integer, got N={N!r}")
    N = int(N)
    if N < 4 or N % 2 != 0:
        raise ConfigError(f"node count must be even and >= 4, got N={N}")
    h = L / N
    nodes = a + h * np.arange(N)
    return Grid(a=float(a), L=float(L), N=N, h=h, nodes=nodes)


@dataclass(frozen=True)
class SpectralOps:
    """Per-mode multipliers for the three derivative operators on a grid.

    ``sym1``/``sym2``/``symD`` are full-spectrum symbols in native FFT
    ordering ``(0, 1, ..., N/2 - 1, +-N/2, -N/2 + 1, ..., -1)``; the
    ``*_half`` variants hold the non-negative frequencies only and are the
    ones used together with the real-input transform.
    """

    grid: Grid
    sym1: np.ndarray
    sym2: np.ndarray
    symD: np.ndarray
    sym1_half: np.ndarray
    sym2_half: np.ndarray
    symD_half: np.ndarray


def build_ops(grid: Grid) -> SpectralOps:
    """Precompute derivative symbols for ``grid``.

    The first-derivative symbol is ``i mu k`` with the Nyquist entry set to
    zero; the second-derivative symbol is ``-(mu k)^2`` including Nyquist;
    the smoothing-derivative symbol is their quotient ``sym1 / (1 - sym2)``.
    """
    mu = grid.mu
    k = np.fft.fftfreq(grid.N, d=1.0 / grid.N)
    sym1 = 1j * mu * k
    sym1[grid.N // 2] = 0.0
    sym2 = -((mu * k) ** 2)
    symD = sym1 / (1.0 - sym2)

    kh = np.fft.rfftfreq(grid.N, d=1.0 / grid.N)
    sym1_half = 1j * mu * kh
    sym1_half[-1] = 0.0
    sym2_half = -((mu * kh) ** 2)
    symD_half = sym1_half / (1.0 - sym2_half)

    sym1.flags.writeable = False
    sym2.flags.writeable = False
    symD.flags.writeable = False
    sym1_half.flags.writeable = False
    sym2_half.flags.writeable = False
    symD_half.flags.writeable = False
    return SpectralOps(grid, sym1, sym2, symD, sym1_half, sym2_half, symD_half)


def _check_field(ops: SpectralOps, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u)
    if u.ndim == 0 or u.shape[-1] != ops.grid.N:
        raise ValueError(
            f"field length {u.shape[-1] if u.ndim else 0} does not match grid N={ops.grid.N}"
        )
    return u


def apply_d1(ops: SpectralOps, u: np.ndarray) -> np.ndarray:
    """First derivative of the interpolant, vectorized over leading axes."""
    u = _check_field(ops, u)
    return np.fft.irfft(ops.sym1_half * np.fft.rfft(u, axis=-1), n=ops.grid.N, axis=-1)


def apply_d2(ops: SpectralOps, u: np.ndarray) -> np.ndarray:
    """Second derivative of the interpolant, vectorized over leading axes."""
    u = _check_field(ops, u)
    return np.fft.irfft(ops.sym2_half * np.fft.rfft(u, axis=-1), n=ops.grid.N, axis=-1)


def apply_D(ops: SpectralOps, u: np.ndarray) -> np.ndarray:
    """Smoothing derivative ``(I - D2)^-1 D1 u``, vectorized over leading axes."""
    u = _check_field(ops, u)
    return np.fft.irfft(ops.symD_half * np.fft.rfft(u, axis=-1), n=ops.grid.N, axis=-1)


def inner(grid: Grid, u: np.ndarray, v: np.ndarray) -> float:
    """Discrete L2 inner product ``h * sum_j u_j v_j``."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != (grid.N,) or v.shape != (grid.N,):
        raise ValueError(
            f"inner product needs two length-{grid.N} fields, got {u.shape} and {v.shape}"
        )
    return grid.h * float(np.dot(u, v))
