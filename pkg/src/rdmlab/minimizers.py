"""Periodic corner configurations attaining the bottom of the spectrum.

Corner patterns are sign sequences s in {-1, +1}^L (omega_i = s_i d_max) taken
modulo cyclic rotation.  Reflections are kept distinct.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cell import Alternative, classify_alternative
from .errors import AlternativeIIError, NumericalFailure, ValidationError
from .model import DisplacementConfig, dimer_config, stream_uniforms
from .parallel import pmap
from .transfer import periodic_ground_energy

MAX_L = 20
TOL = 1e-7
SAFETY = 10.0
INTERIOR_FRACTION = 0.98
TAG_INTERIOR = 2


def _necklaces(n):
    """Binary necklaces of length n in lexicographic order (FKM algorithm)."""
    a = [0] * (n + 1)
    t, p = 1, 1

    def gen(t, p):
        if t > n:
            if n % p == 0:
                yield tuple(a[1:])
            return
        a[t] = a[t - p]
        yield from gen(t + 1, p)
        if a[t - p] == 0:
            a[t] = 1
            yield from gen(t + 1, t)

    yield from gen(t, p)


def necklace_count(n):
    """Burnside: (1/n) sum_{d | n} phi(d) 2^(n/d)."""
    total = 0
    for d in range(1, n + 1):
        if n % d == 0:
            phi = sum(1 for k in range(1, d + 1) if math.gcd(k, d) == 1)
            total += phi * 2 ** (n // d)
    return total // n


def enumerate_corner_configs(L):
    """Lexicographically smallest rotations of all sign patterns of length L."""
    if not isinstance(L, (int, np.integer)) or L < 1:
        raise ValidationError(f"period must be an integer >= 1, got {L!r}")
    if L > MAX_L:
        raise ValidationError(
            f"period {L} needs 2^{L} patterns; the limit is L <= {MAX_L}. "
            "Use interior_perturbation_check or sampled configurations for longer periods.")
    out = [tuple(2 * b - 1 for b in neck) for neck in _necklaces(int(L))]
    if len(out) != necklace_count(int(L)):
        raise NumericalFailure("necklace enumeration disagrees with the Burnside count")
    return out


def pattern_string(signs):
    return "".join("+" if s > 0 else "-" for s in signs)


def is_balanced(signs):
    return len(signs) % 2 == 0 and sum(signs) == 0


def _require_alternative_i(q):
    if classify_alternative(q) is Alternative.II:
        raise AlternativeIIError(
            "q is in alternative (ii): the spectral minimum is 0 for every configuration, "
            "so there is nothing to classify")


@dataclass(frozen=True)
class MinimizerReport:
    period: int
    configs_tested: int
    minimizers: list
    energy_gaps: dict
    tolerance: float
    E0: float

    def to_dict(self):
        return {"period": self.period, "configs_tested": self.configs_tested,
                "minimizers": [pattern_string(m) for m in self.minimizers],
                "energy_gaps": {pattern_string(k): v for k, v in self.energy_gaps.items()},
                "tolerance": self.tolerance, "E0": self.E0}


def classify_minimizers(q, L, tol=TOL, safety=SAFETY, threads=None, check=True):
    """Orbits whose periodic ground energy lies within ``tol`` of E0 (the dimer).

    With ``check`` the result is tested against the balanced-even
    characterization and every non-minimizer must clear ``safety * tol``.
    """
    _require_alternative_i(q)
    d = q.d_max
    E0 = periodic_ground_energy(q, dimer_config(2, d))
    patterns = enumerate_corner_configs(L)
    energies = pmap(lambda s: periodic_ground_energy(q, DisplacementConfig.from_signs(s, d)),
                    patterns, threads)
    gaps = {s: float(e - E0) for s, e in zip(patterns, energies)}
    mins = [s for s in patterns if gaps[s] <= tol]
    if check:
        wrong = [pattern_string(s) for s in mins if not is_balanced(s)]
        missed = [pattern_string(s) for s in patterns if is_balanced(s) and s not in mins]
        close = [pattern_string(s) for s in patterns
                 if s not in mins and gaps[s] <= safety * tol]
        if wrong or missed or close:
            raise NumericalFailure(
                f"minimizer set inconsistent with the balanced-even characterization: "
                f"unbalanced minimizers {wrong}, balanced non-minimizers {missed}, "
                f"unresolved gaps {close}")
    return MinimizerReport(int(L), len(patterns), mins, gaps, float(tol), float(E0))


@dataclass(frozen=True)
class InteriorReport:
    period: int
    samples: int
    min_gap: float
    gaps: np.ndarray
    configs: np.ndarray
    margin: float

    @property
    def passed(self):
        return bool(np.all(self.gaps > self.margin))

    def to_dict(self):
        return {"period": self.period, "samples": self.samples, "min_gap": self.min_gap,
                "margin": self.margin, "passed": self.passed}


def interior_perturbation_check(q, L, samples, seed, margin=1e-9, threads=None):
    """Corner configurations with at least one site moved into the interior.

    Each sample draws random corner signs, a non-empty random subset of sites,
    and for those sites a displacement uniform on
    (-0.98 d_max, 0.98 d_max).  Every such periodic configuration must sit
    strictly above E0.
    """
    _require_alternative_i(q)
    if L < 1 or samples < 1:
        raise ValidationError("L and samples must be >= 1")
    d = q.d_max
    E0 = periodic_ground_energy(q, dimer_config(2, d))
    u = stream_uniforms(seed, 3 * L + 1, 0, samples, tag=TAG_INTERIOR)
    signs = np.where(u[:, :L] < 0.5, -1.0, 1.0)
    moved = u[:, L:2 * L] < 0.5
    # force at least one interior site
    first = np.minimum((u[:, 3 * L] * L).astype(int), L - 1)
    moved[np.arange(samples), first] = True
    interior = INTERIOR_FRACTION * d * (2.0 * u[:, 2 * L:3 * L] - 1.0)
    om = np.where(moved, interior, signs * d)
    energies = pmap(lambda row: periodic_ground_energy(q, DisplacementConfig(row, d, True)),
                    list(om), threads)
    gaps = np.array(energies) - E0
    return InteriorReport(int(L), int(samples), float(gaps.min()), gaps, om, float(margin))
