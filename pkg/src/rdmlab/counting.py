"""Eigenvalue counting for finite-volume restrictions H^X on (1/2, L + 1/2).

Dirichlet and Neumann counts come from the Sturm oscillation theorem; the
zeros of the shooting solution are counted piece by piece in closed form.
The periodic count is read off from the Dirichlet count and the position of
the discriminant D(E) relative to [-2, 2].
"""
from __future__ import annotations

from dataclasses import dataclass

from . import sturm
from .cell import neumann_ground_energy
from .errors import AmbiguousCount, NumericalFailure, ValidationError
from .model import assemble_potential
from .transfer import config_transfer

BCS = ("D", "N", "P")
GROUND_TOL = 1e-10
DISCRIMINANT_TOL = 1e-10


@dataclass(frozen=True)
class CountResult:
    energy: float
    count: int
    boundary_condition: str


def _check_bc(bc):
    if bc not in BCS:
        raise ValidationError(f"boundary condition must be one of {BCS}, got {bc!r}")


def periodic_count(n_dirichlet, disc):
    """Periodic eigenvalues below E from the Dirichlet count and D(E).

    Inside a band (|D| <= 2) the count is 1 + 2 floor(n/2).  In a gap both
    edges are periodic (D > 2) or both antiperiodic (D < -2); the count is the
    gap index, which n matches or undershoots by one depending on parity.
    """
    n = n_dirichlet
    if abs(disc) <= 2.0:
        return 1 + 2 * (n // 2)
    if disc > 2.0:
        return n if n % 2 == 0 else n + 1
    return n if n % 2 == 1 else n + 1


def _count(values, lengths, q, config, E, bc, strict):
    if bc == "P":
        n = sturm.count(values, lengths, E, "D")
        disc = config_transfer(q, config, E).trace
        if strict and abs(abs(disc) - 2.0) <= DISCRIMINANT_TOL:
            raise AmbiguousCount(f"E={E!r} is a periodic or antiperiodic eigenvalue; perturb E")
        return periodic_count(n, disc)
    return sturm.count(values, lengths, E, bc, strict=strict)


def count_below(q, config, E, bc="D"):
    """Number of eigenvalues of H^bc strictly below ``E``."""
    _check_bc(bc)
    V = assemble_potential(q, config)
    return CountResult(float(E), _count(V.values, V.lengths, q, config, float(E), bc, True), bc)


def finite_volume_ground(q, config, bc="D"):
    """Lowest eigenvalue of H^bc by bisection on the count (tolerance 1e-10)."""
    _check_bc(bc)
    V = assemble_potential(q, config)
    if bc != "P":
        return sturm.ground(V.values, V.lengths, bc, tol=GROUND_TOL)
    lo, hi = sturm.spectrum_window(V.values, V.lengths)
    if _count(V.values, V.lengths, q, config, lo, bc, False) != 0:
        raise NumericalFailure("periodic count is positive below inf V")
    while hi - lo > GROUND_TOL:
        mid = 0.5 * (lo + hi)
        if _count(V.values, V.lengths, q, config, mid, bc, False) == 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class BracketingBound:
    bound: float
    ground: float
    cell_energies: tuple

    @property
    def slack(self):
        return self.ground - self.bound


def neumann_bracketing_bound(q, config):
    """Neumann bracketing: E0(H^N) >= min_i E0(omega_i).

    Decoupling the box into unit cells with Neumann conditions only lowers the
    ground energy.  The returned object carries both sides; a violation beyond
    1e-9 raises ``NumericalFailure``.
    """
    cache = {}
    for w in config.displacements:
        w = float(w)
        if w not in cache:
            cache[w] = neumann_ground_energy(q, w)
    cells = tuple(cache[float(w)] for w in config.displacements)
    bound = min(cells)
    ground = finite_volume_ground(q, config, "N")
    if ground < bound - 1e-9:
        raise NumericalFailure(f"bracketing violated: ground {ground} < bound {bound}")
    return BracketingBound(bound, ground, cells)
