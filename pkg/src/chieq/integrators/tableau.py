"""Gauss-Legendre collocation tableaux of arbitrary stage count.

The nodes are the roots of the shifted Legendre polynomial
``d^s/dx^s [x^s (x - 1)^s]``; weights and the stage matrix follow from
interpolatory quadrature, i.e. Vandermonde solves for the moment conditions

    sum_j b_j c_j^k = 1 / (k + 1),
    sum_j A_ij c_j^k = c_i^(k+1) / (k + 1),        k = 0 .. s-1.

Everything is computed in 60-digit arithmetic and rounded to double once at
the end, so the order conditions and the algebraic-stability identity
``b_i A_ij + b_j A_ji - b_i b_j = 0`` hold to the last float bit even for
s = 8, where a double-precision Vandermonde solve would lose ~5 digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from ..spectral import ConfigError

__all__ = ["GaussTableau", "gauss_tableau"]


@dataclass(frozen=True)
class GaussTableau:
    """Butcher tableau of the ``s``-stage Gauss collocation method (order 2s)."""

    s: int
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray


def _legendre_shifted_coeffs(s: int) -> list[int]:
    # d^s/dx^s [x^s (x-1)^s]; x^s (x-1)^s = sum_j binom(s,j) (-1)^(s-j) x^(s+j)
    # differentiating s times leaves degree j with coefficient (s+j)!/j!.
    coeffs = [0] * (s + 1)
    for j in range(s + 1):
        coeffs[j] = (
            math.comb(s, j)
            * (-1) ** (s - j)
            * math.factorial(s + j)
            // math.factorial(j)
        )
    return coeffs[::-1]  # highest degree first, as polyroots expects


def gauss_tableau(s: int) -> GaussTableau:
    """Nodes, weights and stage matrix of the ``s``-stage Gauss method.

    Parameters
    ----------
    s : int
        Stage count, at least 1.  Values up to 8 are exercised by the test
        suite; larger ones are constructed the same way but unvalidated.
    """
    if int(s) != s or s < 1:
        raise ConfigError(f"stage count must be a positive integer, got s={s!r}")
    s = int(s)

    with mp.workdps(60):
        roots = mp.polyroots(_legendre_shifted_coeffs(s), maxsteps=200, extraprec=120)
        cs = sorted(mp.mpf(r.real) if isinstance(r, mp.mpc) else mp.mpf(r) for r in roots)

        # Vandermonde V[k][j] = c_j^k for the moment conditions above
        V = mp.matrix(s, s)
        for k in range(s):
            for j in range(s):
                V[k, j] = cs[j] ** k

        rhs_b = mp.matrix([mp.mpf(1) / (k + 1) for k in range(s)])
        bs = mp.lu_solve(V, rhs_b)

        As = mp.matrix(s, s)
        for i in range(s):
            rhs_a = mp.matrix([cs[i] ** (k + 1) / (k + 1) for k in range(s)])
            row = mp.lu_solve(V, rhs_a)
            for j in range(s):
                As[i, j] = row[j]

        c = np.array([float(x) for x in cs])
        b = np.array([float(bs[j]) for j in range(s)])
        A = np.array([[float(As[i, j]) for j in range(s)] for i in range(s)])

    c.flags.writeable = False
    b.flags.writeable = False
    A.flags.writeable = False
    return GaussTableau(s=s, c=c, A=A, b=b)
