"""Oscillation counts on an interval tiled by constant pieces.

``count(values, lengths, E, bc)`` is the number of eigenvalues strictly below
``E`` for Dirichlet (``"D"``) or Neumann (``"N"``) conditions at both ends.
"""
import math

from . import kernels
from .errors import AmbiguousCount, NumericalFailure, ValidationError

START = {"D": (0.0, 1.0), "N": (1.0, 0.0)}


def end_state(values, lengths, E, bc):
    u0, du0 = START[bc]
    return kernels.propagate(values, lengths, E, u0, du0)


def count(values, lengths, E, bc, strict=False):
    """Eigenvalue count below ``E``.

    With ``strict`` an energy within 1e-12 (relative to the unit-norm end
    state) of an eigenvalue raises ``AmbiguousCount``.
    """
    if bc not in START:
        raise ValidationError(f"boundary condition must be 'D' or 'N', got {bc!r}")
    zeros, u, du, _ = end_state(values, lengths, E, bc)
    if bc == "D":
        if strict and abs(u) <= kernels.AMBIGUOUS_TOL:
            raise AmbiguousCount(f"E={E!r} is an eigenvalue to within tolerance; perturb E")
        return zeros
    if strict and abs(du) <= kernels.AMBIGUOUS_TOL:
        raise AmbiguousCount(f"E={E!r} is an eigenvalue to within tolerance; perturb E")
    return zeros + (1 if u * du < 0.0 else 0)


def spectrum_window(values, lengths):
    total = float(sum(lengths))
    lo = min(0.0, min(values)) - 1.0
    hi = max(0.0, max(values)) + (math.pi / total) ** 2 + 1.0
    return lo, hi


def ground(values, lengths, bc, tol=1e-10):
    """Lowest eigenvalue by bisection on the count crossing 0 -> 1."""
    values = [float(v) for v in values]
    lengths = [float(x) for x in lengths]
    lo, hi = spectrum_window(values, lengths)
    for _ in range(8):
        if count(values, lengths, lo, bc) == 0 and count(values, lengths, hi, bc) >= 1:
            break
        w = hi - lo
        lo, hi = lo - w, hi + w
    else:
        raise NumericalFailure(f"could not bracket the ground energy ({bc}) in [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if count(values, lengths, mid, bc) == 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
