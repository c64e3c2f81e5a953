"""Transfer matrices for -u'' + V u = E u with piecewise-constant V.

A ``TransferMatrix`` stores ``M`` and ``s`` with the true propagator
``T = e^s M``; its columns map (u, u') at the left end to (u, u') at the
right end.  Products are renormalized by the max-abs entry whenever it
exceeds e^10.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.optimize import brentq

from . import _mp, kernels, sturm
from ._kernels_py import _piece_coeffs
from .cell import cell_pieces
from .errors import NumericalFailure, ValidationError
from .model import assemble_potential

RENORM = math.exp(10.0)
RATIO_RESIDUAL = 1e-6


@dataclass(frozen=True)
class TransferMatrix:
    entries: np.ndarray
    log_scale: float = 0.0

    def __post_init__(self):
        m = np.array(self.entries, dtype=float).reshape(2, 2)
        if not (np.all(np.isfinite(m)) and math.isfinite(self.log_scale)):
            raise NumericalFailure(f"non-finite transfer matrix {m.tolist()} (log scale {self.log_scale})")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "log_scale", float(self.log_scale))

    @property
    def matrix(self):
        """The true propagator e^s M (may overflow for very long boxes)."""
        return math.exp(self.log_scale) * self.entries

    @property
    def trace(self):
        return math.exp(self.log_scale) * float(self.entries[0, 0] + self.entries[1, 1])

    @property
    def det(self):
        (a, b), (c, d) = self.entries
        return math.exp(2.0 * self.log_scale) * (a * d - b * c)

    def det_residual(self):
        """|det T - 1| relative to the size of the terms ad and bc.

        Evaluated in scaled form, so it stays finite when T itself overflows.
        """
        (a, b), (c, d) = self.entries
        unit = math.exp(-2.0 * self.log_scale)
        return abs(a * d - b * c - unit) / max(unit, abs(a * d) + abs(b * c))

    def __matmul__(self, other):
        m = self.entries @ other.entries
        s = self.log_scale + other.log_scale
        big = float(np.abs(m).max())
        if big > RENORM:
            m = m / big
            s += math.log(big)
        return TransferMatrix(m, s)

    def then(self, other):
        """Propagate across ``self`` and then across ``other``."""
        return other @ self

    def apply(self, u, du):
        """(u, u') at the right end, as (unit-norm state, log scale)."""
        x = self.entries @ np.array([u, du], dtype=float)
        nrm = float(np.hypot(*x))
        return x / nrm, self.log_scale + math.log(nrm)


def piece_propagator(v, length, E):
    if not length > 0.0:
        raise ValidationError(f"piece length must be positive, got {length}")
    c, s, sp, lf = _piece_coeffs(float(v), float(length), float(E))
    return TransferMatrix([[c, s], [sp, c]], lf)


def _pieces(q, config):
    V = assemble_potential(q, config)
    return V.values, V.lengths


def config_transfer(q, config, E):
    """Propagator from 1/2 to L + 1/2 through the assembled potential."""
    values, lengths = _pieces(q, config)
    m, s = kernels.transfer(values, lengths, float(E), RENORM)
    return TransferMatrix(m, s)


def discriminant(q, config, E):
    return config_transfer(q, config, E).trace


def periodic_ground_energy(q, config):
    """Bottom of the spectrum of the periodic operator with period ``config``.

    The Floquet discriminant D = tr T exceeds 2 below the spectrum, decreases
    through the first band, and satisfies D <= -2 at the lowest Dirichlet
    eigenvalue of one period (a point of the first gap or its closed edge).
    So D - 2 has exactly one root between inf V - 1 and that eigenvalue.
    """
    if not config.periodic:
        raise ValidationError("periodic_ground_energy needs a configuration flagged periodic")
    values, lengths = _pieces(q, config)
    lo = min(0.0, float(values.min())) - 1.0
    hi = sturm.ground(values, lengths, "D", tol=1e-12)

    def f(E):
        m, s = kernels.transfer(values, lengths, E, RENORM)
        return math.exp(s) * (m[0][0] + m[1][1]) - 2.0

    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo > 0.0 and f_hi < 0.0):
        raise NumericalFailure(
            f"discriminant bracket failed: D-2 = {f_lo} at {lo}, {f_hi} at {hi}")
    return float(brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200))


@dataclass(frozen=True)
class SolutionTrace:
    """(u, u') at the half-integers 1/2, 3/2, ..., L + 1/2.

    ``states`` holds unit-norm pairs and ``log_scales`` their logarithmic
    magnitudes; the true value at point i is exp(log_scales[i]) * states[i].
    """

    states: np.ndarray
    log_scales: np.ndarray
    energy: float

    @property
    def u(self):
        return np.exp(self.log_scales) * self.states[:, 0]

    @property
    def du(self):
        return np.exp(self.log_scales) * self.states[:, 1]

    @property
    def values(self):
        return np.column_stack([self.u, self.du])

    def ratios(self):
        """u(i + 1/2) / u(i - 1/2) for i = 1..L."""
        s = self.states[:, 0]
        return np.exp(np.diff(self.log_scales)) * s[1:] / s[:-1]

    def slope_residual(self):
        """max_i |u'(i + 1/2)| / |u(i + 1/2)|."""
        return float(np.max(np.abs(self.states[:, 1]) / np.abs(self.states[:, 0])))


def neumann_trace(q, config, E, dps=None):
    """Propagate (u, u') = (1, 0) from 1/2 cell by cell.

    With ``dps`` the propagation runs in ``dps``-digit arithmetic (pass an
    energy refined to the same precision, e.g. from
    ``neumann_ground_energy(q, a, dps=dps)``); the stored trace is still
    double precision.
    """
    if dps is not None:
        return _neumann_trace_mp(q, config, E, dps)
    L = config.L
    states = np.empty((L + 1, 2))
    logs = np.empty(L + 1)
    states[0] = (1.0, 0.0)
    logs[0] = 0.0
    u, du, lg = 1.0, 0.0, 0.0
    cache = {}
    for i, w in enumerate(config.displacements, start=1):
        key = float(w)
        if key not in cache:
            cache[key] = cell_pieces(q, key)
        _, u, du, ds = kernels.propagate(*cache[key], float(E), u, du)
        lg += ds
        states[i] = (u, du)
        logs[i] = lg
    return SolutionTrace(states, logs, float(E))


def _neumann_trace_mp(q, config, E, dps):
    L = config.L
    states = np.empty((L + 1, 2))
    logs = np.empty(L + 1)
    states[0] = (1.0, 0.0)
    logs[0] = 0.0
    with mpmath.workdps(dps):
        E = mpmath.mpf(E)
        u, du, lg = mpmath.mpf(1), mpmath.mpf(0), mpmath.mpf(0)
        cache = {}
        for i, w in enumerate(config.displacements, start=1):
            key = float(w)
            if key not in cache:
                cache[key] = _mp.transfer(*cell_pieces(q, key), E)
            a, b, c, d = cache[key]
            u, du = a * u + b * du, c * u + d * du
            nrm = mpmath.sqrt(u * u + du * du)
            u, du = u / nrm, du / nrm
            lg += mpmath.log(nrm)
            states[i] = (float(u), float(du))
            logs[i] = float(lg)
    return SolutionTrace(states, logs, float(E))


def random_walk_exponents(trace, rho):
    """Partial sums S_i of X_i = log(u(i+1/2)/u(i-1/2)) / log(rho), X_i rounded to +-1."""
    if not rho > 0.0 or abs(math.log(rho)) < 1e-12:
        raise ValidationError("rho must be positive and different from 1")
    r = trace.ratios()
    if np.any(r <= 0.0):
        raise ValidationError("trace changes sign; not a ground-state trace")
    x = np.log(r) / math.log(rho)
    xr = np.rint(x)
    resid = float(np.max(np.abs(x - xr))) if x.size else 0.0
    if resid > RATIO_RESIDUAL or np.any(np.abs(xr) != 1.0):
        raise ValidationError(
            f"cell ratios are not rho^(+-1) (residual {resid:.3g}); "
            "config not corner-valued or E is not E0")
    return np.cumsum(xr.astype(np.int64))
