"""Single-cell Neumann problem for -u'' + q(x - a) u = E u on (-1/2, 1/2).

The ground energy E0(a) is the lowest Neumann eigenvalue.  It is located by
bisection on the oscillation count (the Neumann count at E is the number of
eigenvalues below E) until the bracket holds exactly one eigenvalue, then
refined with Brent's method on u'(1/2; E).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _mp, kernels
from ._kernels_py import _piece_coeffs
from .errors import NumericalFailure, ValidationError
from .model import MERGE_TOL, SingleSitePotential

ENERGY_TOL = 1e-12
ALT_II_THRESHOLD = 1e-9
MAX_WIDEN = 8


class Alternative(enum.Enum):
    I = "AlternativeI"
    II = "AlternativeII"


@dataclass(frozen=True)
class CellGroundState:
    """Neumann ground state of one cell with the bump displaced by ``a``.

    ``boundary_values`` are psi(-1/2), psi(1/2) for the L2-normalized, positive
    ground state; ``ratio`` is psi(1/2)/psi(-1/2).
    """

    a: float
    energy: float
    ratio: float
    boundary_values: tuple

    def __post_init__(self):
        if not self.ratio > 0.0:
            raise NumericalFailure(f"ground state changes sign (ratio {self.ratio})")


def cell_pieces(q, a):
    """Piece values and lengths of q(x - a) across (-1/2, 1/2)."""
    d = q.d_max
    if abs(a) > d + MERGE_TOL:
        raise ValidationError(f"displacement {a} outside [-{d}, {d}]")
    a = min(max(a, -d), d)
    left = a + d
    right = d - a
    vals = [0.0] + [v for _, _, v in q.pieces] + [0.0]
    lens = [left] + list(q.lengths) + [right]
    keep = [i for i, ell in enumerate(lens) if ell > 0.0]
    return np.array([vals[i] for i in keep]), np.array([lens[i] for i in keep])


def _neumann_count(values, lengths, E):
    zeros, u, du, _ = kernels.propagate(values, lengths, E, 1.0, 0.0)
    return zeros + (1 if u * du < 0.0 else 0), zeros, u, du


def _end_slope(values, lengths, E):
    _, _, du, _ = kernels.propagate(values, lengths, E, 1.0, 0.0)
    return du


def neumann_ground(values, lengths):
    """Lowest Neumann eigenvalue of -d^2/dx^2 + V on an interval tiled by pieces."""
    values = np.asarray(values, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    total = float(lengths.sum())
    lo = min(0.0, float(values.min())) - 1.0
    hi = max(0.0, float(values.max())) + (math.pi / total) ** 2 + 1.0
    width = hi - lo
    for _ in range(MAX_WIDEN):
        if _neumann_count(values, lengths, lo)[0] == 0 and _neumann_count(values, lengths, hi)[0] >= 1:
            break
        lo -= width
        hi += width
        width *= 2.0
    else:
        raise NumericalFailure(f"could not bracket the Neumann ground energy in [{lo}, {hi}]")
    # shrink until exactly one eigenvalue sits in (lo, hi]
    while True:
        n_hi = _neumann_count(values, lengths, hi)[0]
        if n_hi == 1 or hi - lo < ENERGY_TOL:
            break
        mid = 0.5 * (lo + hi)
        if _neumann_count(values, lengths, mid)[0] == 0:
            lo = mid
        else:
            hi = mid
    f_lo = _end_slope(values, lengths, lo)
    f_hi = _end_slope(values, lengths, hi)
    if f_lo == 0.0:
        E = lo
    elif f_hi == 0.0:
        E = hi
    elif (f_lo > 0.0) == (f_hi > 0.0):
        raise NumericalFailure(f"Neumann end slope does not change sign on [{lo}, {hi}]")
    else:
        E = brentq(lambda e: _end_slope(values, lengths, e), lo, hi, xtol=ENERGY_TOL, rtol=8.9e-16)
    zeros = kernels.propagate(values, lengths, E, 1.0, 0.0)[0]
    if zeros != 0:
        raise NumericalFailure(f"root at E={E} is not the ground state ({zeros} interior zeros)")
    return float(E)


def neumann_ground_energy(q, a, dps=None):
    """E0(a), the Neumann ground energy of the cell with the bump at ``a``.

    With ``dps`` the root is refined to that many decimal digits and returned
    as an ``mpmath.mpf``.
    """
    values, lengths = cell_pieces(q, a)
    E = neumann_ground(values, lengths)
    if dps is None:
        return E
    return _mp.neumann_ground(values, lengths, E, dps)


def _norm2(values, lengths, E, u0, du0, order=24):
    """L2 norm squared of the solution through consecutive pieces (Gauss-Legendre)."""
    xg, wg = np.polynomial.legendre.leggauss(order)
    total = 0.0
    u, du = u0, du0
    for v, ell in zip(values, lengths):
        ts = 0.5 * ell * (xg + 1.0)
        vals = np.empty(order)
        for i, t in enumerate(ts):
            c, s, _, lf = _piece_coeffs(float(v), float(t), E)
            vals[i] = math.exp(lf) * (c * u + s * du)
        total += 0.5 * ell * float(np.dot(wg, vals * vals))
        c, s, sp, lf = _piece_coeffs(float(v), float(ell), E)
        g = math.exp(lf)
        u, du = g * (c * u + s * du), g * (sp * u + c * du)
    return total


def neumann_ground_ratio(q, a):
    values, lengths = cell_pieces(q, a)
    E = neumann_ground(values, lengths)
    _, u, _, lscale = kernels.propagate(values, lengths, E, 1.0, 0.0)
    ratio = u * math.exp(lscale)
    nrm = math.sqrt(_norm2(values, lengths, E, 1.0, 0.0))
    return CellGroundState(float(a), E, ratio, (1.0 / nrm, ratio / nrm))


def classify_alternative(q):
    """Alternative II iff the Neumann ground energy of -d^2 + q on (-r, r) vanishes."""
    if q.free:
        return Alternative.II
    e = neumann_ground(q.values, q.lengths)
    return Alternative.II if abs(e) <= ALT_II_THRESHOLD else Alternative.I


@dataclass(frozen=True)
class CellLandscape:
    states: tuple

    @property
    def a(self):
        return np.array([s.a for s in self.states])

    @property
    def energies(self):
        return np.array([s.energy for s in self.states])

    def rows(self):
        for s in self.states:
            yield (s.a, s.energy, s.ratio, s.boundary_values[0], s.boundary_values[1])


def e0_landscape(q, a_grid, check=True):
    """Ground states over ``a_grid``.

    Under alternative (i) the energy must peak at the grid point closest to 0
    and bottom out at the points farthest from it; ``check`` enforces that.
    """
    a_grid = [float(a) for a in a_grid]
    if not a_grid:
        raise ValidationError("empty displacement grid")
    land = CellLandscape(tuple(neumann_ground_ratio(q, a) for a in a_grid))
    if check and len(a_grid) > 1 and classify_alternative(q) is Alternative.I:
        e = land.energies
        absa = np.abs(land.a)
        centre = absa == absa.min()
        edge = absa == absa.max()
        if e[centre].min() < e.max() - 1e-10 or e[edge].max() > e.min() + 1e-10:
            raise NumericalFailure("E0(a) is not maximal at the centre and minimal at the corners")
    return land


def tuned_alternative_ii(depth=10.0, support_radius=0.25):
    """Sign-indefinite bump with vanishing (-r, r) Neumann ground energy.

    The value is ``-depth`` on the outer halves of the support and a barrier
    ``+c'`` in the middle; ``c'`` is tuned so the ground energy of the
    support problem is 0.
    """
    r = support_radius
    h = r / 2.0

    def build(barrier):
        return SingleSitePotential(r, ((-r, -h, -depth), (-h, h, barrier), (h, r, -depth)))

    def e(barrier):
        q = build(barrier)
        return neumann_ground(q.values, q.lengths)

    hi = 1e3
    if not e(0.0) < 0.0 < e(hi):
        raise NumericalFailure("could not bracket the alternative (ii) barrier height")
    barrier = brentq(e, 0.0, hi, xtol=1e-14, rtol=8.9e-16)
    return build(barrier)
