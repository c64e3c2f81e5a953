"""Dense finite-difference oracle, independent of the transfer-matrix stack.

Second-order central differences on the nodes x_j = 1/2 + j h of the box
(1/2, L + 1/2).  Dirichlet conditions drop the end nodes; Neumann conditions
use mirror ghost nodes, which gives end rows (2u_0 - 2u_1)/h^2; the matrix is
symmetrized by scaling the end unknowns by sqrt(2), so the end couplings
become -sqrt(2)/h^2.  The potential enters as its exact average over each
node's dual cell, which keeps the scheme second order across jumps.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigvalsh_tridiagonal
from scipy.sparse.linalg import eigsh

from .errors import ValidationError
from .model import assemble_potential


def _cell_average(breakpoints, values, a, b):
    """Average of the piecewise-constant function over each [a_j, b_j]."""
    cum = np.concatenate([[0.0], np.cumsum(values * np.diff(breakpoints))])
    F = lambda x: np.interp(x, breakpoints, cum)
    return (F(b) - F(a)) / (b - a)


def grid(length, h, offset=0.5):
    n = int(round(length / h))
    if n < 2 or abs(n * h - length) > 1e-9 * length:
        raise ValidationError(f"grid spacing {h} must divide the box length {length}")
    return n, offset + np.arange(n + 1) * (length / n), length / n


def tridiagonal(breakpoints, values, h, bc):
    """Diagonal and off-diagonal of the symmetric FD matrix."""
    lo, hi = float(breakpoints[0]), float(breakpoints[-1])
    n, x, h = grid(hi - lo, h, lo)
    a = np.clip(x - h / 2, lo, hi)
    b = np.clip(x + h / 2, lo, hi)
    V = _cell_average(np.asarray(breakpoints, float), np.asarray(values, float), a, b)
    inv = 1.0 / (h * h)
    if bc == "D":
        d = 2.0 * inv + V[1:-1]
        e = np.full(n - 2, -inv)
    elif bc == "N":
        d = 2.0 * inv + V
        e = np.full(n, -inv)
        e[0] = e[-1] = -np.sqrt(2.0) * inv
    else:
        raise ValidationError(f"oracle supports 'D' and 'N', got {bc!r}")
    return d, e


def box_tridiagonal(q, config, h, bc):
    V = assemble_potential(q, config)
    return tridiagonal(V.breakpoints, V.values, h, bc)


def eigenvalues_below(d, e, E):
    """All eigenvalues < E (LAPACK stebz bisection on Sturm sequences)."""
    lo = float(np.min(d - 2.0 * np.abs(np.concatenate([[0.0], e])) - 1.0))
    if E <= lo:
        return np.empty(0)
    return eigvalsh_tridiagonal(d, e, select="v", select_range=(lo, E))


def oracle_count(q, config, E, h=2e-4, bc="D"):
    return int(eigenvalues_below(*box_tridiagonal(q, config, h, bc), E).size)


def oracle_eigenvalues(q, config, k, h=2e-4, bc="D"):
    d, e = box_tridiagonal(q, config, h, bc)
    return eigvalsh_tridiagonal(d, e, select="i", select_range=(0, k - 1))


def neumann_interval_ground(breakpoints, values, h=1e-4):
    d, e = tridiagonal(breakpoints, values, h, "N")
    return float(eigvalsh_tridiagonal(d, e, select="i", select_range=(0, 0))[0])


def periodic_eigenvalues(q, config, k=1, h=2e-4):
    """Lowest ``k`` eigenvalues with periodic conditions (sparse shift-invert)."""
    V = assemble_potential(q, config)
    lo, hi = float(V.breakpoints[0]), float(V.breakpoints[-1])
    n, x, h = grid(hi - lo, h, lo)
    xs = x[:-1]
    pot = _cell_average(V.breakpoints, V.values, xs - h / 2, xs + h / 2)
    # node 0 wraps around: its dual cell is [hi - h/2, hi] u [lo, lo + h/2]
    pot[0] = 0.5 * (_cell_average(V.breakpoints, V.values, np.array([lo]), np.array([lo + h / 2]))[0]
                    + _cell_average(V.breakpoints, V.values, np.array([hi - h / 2]), np.array([hi]))[0])
    inv = 1.0 / (h * h)
    main = 2.0 * inv + pot
    off = np.full(n - 1, -inv)
    A = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    A[0, n - 1] = -inv
    A[n - 1, 0] = -inv
    sigma = float(pot.min()) - 1.0
    vals = eigsh(A.tocsc(), k=k, sigma=sigma, which="LM", return_eigenvectors=False)
    return np.sort(vals)
