"""Monte Carlo integrated density of states near the bottom of the spectrum.

N(E) is estimated as E[count_D(E)] / L over sampled configurations of a box
of L cells.  Sample i of a box of length L always uses the same random
numbers (see ``model.stream_uniforms``), so all energies sharing a box
length see the same configurations and results do not depend on the
chunking or thread count; the per-chunk integer sums are reduced exactly.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from . import kernels
from .cell import neumann_ground_ratio
from .errors import FitRefused, ValidationError
from .model import BLOCK, dimer_config, sample_displacements
from .parallel import pmap
from .transfer import periodic_ground_energy

log = logging.getLogger(__name__)

Z95 = float(norm.ppf(0.975))
TAG_IDS = 0
TAG_PROBE = 1
BETAS = (0.1, 1.0, 10.0)


# -- box length policies --------------------------------------------------------

def adaptive_box_length(E, E0, rho, beta_guess=1.0):
    """Smallest L with exp(-2 sqrt(L) log rho) / (2 beta) <= E - E0."""
    gap = E - E0
    if not gap > 0.0:
        raise ValidationError(f"adaptive box length needs E > E0 (E - E0 = {gap})")
    if not rho > 0.0 or rho == 1.0:
        raise ValidationError("rho must be positive and different from 1")
    if not beta_guess > 0.0:
        raise ValidationError("beta must be positive")
    lr = abs(math.log(rho))
    x = -math.log(2.0 * beta_guess * gap) / (2.0 * lr)
    if x <= 0.0:
        return 1
    return max(1, math.ceil(x * x - 1e-9))


@dataclass(frozen=True)
class FixedL:
    L: int

    def __post_init__(self):
        if int(self.L) < 1:
            raise ValidationError(f"box length must be >= 1, got {self.L}")

    def length(self, E):
        return int(self.L)

    def describe(self):
        return f"fixed:{self.L}"


@dataclass(frozen=True)
class AdaptiveL:
    E0: float
    rho: float
    beta: float = 1.0

    def length(self, E):
        return adaptive_box_length(E, self.E0, self.rho, self.beta)

    def describe(self):
        return f"adaptive(beta={self.beta})"


def spectral_minimum(q):
    """E0 = bottom of the spectrum for all Bernoulli corner configurations (dimer)."""
    return periodic_ground_energy(q, dimer_config(2, q.d_max))


def corner_ratio(q):
    """rho >= 1 from the corner cell ground state (the reciprocal if needed)."""
    r = neumann_ground_ratio(q, q.d_max).ratio
    return max(r, 1.0 / r)


# -- counting over samples -------------------------------------------------------

def _chunks(samples, size=BLOCK):
    return [(s, min(size, samples - s)) for s in range(0, samples, size)]


def _count_sums(q, dist, L, energies, samples, seed, bc, tag, threads, what="sum"):
    """Exact integer reductions of the counts over samples.

    ``what='sum'`` gives (sum, sum of squares) per energy, ``'positive'`` the
    number of samples with count >= 1.  Returns (stats, nudged).
    """
    energies = np.asarray(energies, dtype=float)
    code = kernels.BC_DIRICHLET if bc == "D" else kernels.BC_NEUMANN

    def work(chunk):
        start, n = chunk
        om = sample_displacements(dist, L, seed, start=start, count=n, tag=tag)
        c, nudged = kernels.batch_counts(q.values, q.lengths, q.d_max, om, energies, code)
        if what == "positive":
            return (c >= 1).sum(axis=0), None, nudged
        return c.sum(axis=0), (c * c).sum(axis=0), nudged

    parts = pmap(work, _chunks(samples), threads)
    s1 = np.zeros(energies.size, dtype=np.int64)
    s2 = np.zeros(energies.size, dtype=np.int64)
    nudged = 0
    for a, b, n in parts:
        s1 += a
        if b is not None:
            s2 += b
        nudged += n
    if nudged:
        log.warning("%d count(s) sat on an eigenvalue and were re-evaluated at E + %g",
                    nudged, kernels.NUDGE)
    return (s1, s2), nudged


@dataclass(frozen=True)
class IdsEstimate:
    energies: np.ndarray
    n_values: np.ndarray
    half_widths: np.ndarray
    samples: int
    box_length: np.ndarray
    bc: str = "D"
    nudged: int = 0

    def monotonicity_violations(self, k=3.0):
        """Indices i where N drops from point i to i+1 by more than k combined half-widths."""
        n, hw = self.n_values, self.half_widths
        drop = n[:-1] - n[1:]
        tol = k * np.hypot(hw[:-1], hw[1:]) / Z95
        return np.nonzero(drop > tol + 1e-15)[0]

    def rows(self):
        for E, N, hw, L in zip(self.energies, self.n_values, self.half_widths, self.box_length):
            yield float(E), float(N), float(hw), int(L), int(self.samples)

    @classmethod
    def from_rows(cls, rows):
        rows = list(rows)
        if not rows:
            raise ValidationError("empty IDS table")
        E, N, hw, L, S = (np.array(c) for c in zip(*rows))
        if np.any(S != S[0]):
            raise ValidationError("IDS table mixes sample counts")
        return cls(E.astype(float), N.astype(float), hw.astype(float), int(S[0]), L.astype(int))


def estimate_ids(q, dist, E_grid, samples, L_policy, seed, bc="D", threads=None):
    """IDS estimate with normal-approximation 95% half-widths.

    ``L_policy`` is an integer (fixed box) or an object with ``length(E)``
    such as ``AdaptiveL``.
    """
    if int(samples) < 1:
        raise ValidationError(f"samples must be >= 1, got {samples}")
    if bc not in ("D", "N"):
        raise ValidationError(f"estimate_ids supports 'D' or 'N', got {bc!r}")
    E = np.asarray(E_grid, dtype=float).reshape(-1)
    if E.size == 0 or np.any(np.diff(E) < 0):
        raise ValidationError("energy grid must be non-empty and sorted")
    policy = FixedL(int(L_policy)) if isinstance(L_policy, (int, np.integer)) else L_policy
    samples = int(samples)
    lengths = np.array([policy.length(e) for e in E], dtype=np.int64)
    n_values = np.empty(E.size)
    half = np.empty(E.size)
    nudged = 0
    for L in np.unique(lengths):
        idx = np.nonzero(lengths == L)[0]
        (s1, s2), nd = _count_sums(q, dist, int(L), E[idx], samples, seed, bc, TAG_IDS, threads)
        nudged += nd
        mean = s1 / samples
        var = np.maximum(s2 / samples - mean * mean, 0.0)
        if samples > 1:
            var *= samples / (samples - 1)
        n_values[idx] = mean / L
        half[idx] = Z95 * np.sqrt(var / samples) / L
    est = IdsEstimate(E, n_values, half, samples, lengths, bc, nudged)
    bad = est.monotonicity_violations()
    if bad.size:
        log.warning("IDS decreases beyond 3 sigma at grid indices %s", bad.tolist())
    return est


# -- probe of the standard lower bound -------------------------------------------

def wilson_interval(k, n, z=Z95):
    p = k / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    rad = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - rad), min(1.0, centre + rad)


@dataclass(frozen=True)
class ProbeResult:
    energy: float
    L: int
    samples: int
    hits: int
    probability: float
    interval: tuple

    @property
    def n_lower_bound(self):
        """P(E0(H^D_L) < E) / L, a lower bound on N(E)."""
        return self.probability / self.L


def dirichlet_probe(q, dist, E, L, samples, seed, threads=None):
    """Empirical P(E0(H^D_{omega,L}) < E) with a Wilson 95% interval."""
    if int(samples) < 1:
        raise ValidationError(f"samples must be >= 1, got {samples}")
    if int(L) < 1:
        raise ValidationError(f"L must be >= 1, got {L}")
    (hits, _), _ = _count_sums(q, dist, int(L), [float(E)], int(samples), seed, "D",
                               TAG_PROBE, threads, what="positive")
    k = int(hits[0])
    return ProbeResult(float(E), int(L), int(samples), k, k / samples,
                       wilson_interval(k, int(samples)))


def calibrate_beta(q, dist, gaps, E0, rho, samples, seed, betas=BETAS, threads=None):
    """Pick the beta maximizing the mean probe probability over ``gaps``.

    Returns (best beta, {beta: [ProbeResult per gap]}).
    """
    table = {}
    for b in betas:
        table[b] = [dirichlet_probe(q, dist, E0 + g, adaptive_box_length(E0 + g, E0, rho, b),
                                    samples, seed, threads) for g in gaps]
    best = max(betas, key=lambda b: (np.mean([p.probability for p in table[b]]), -b))
    return best, table


# -- tail models -------------------------------------------------------------------

MODELS = ("log-squared", "power-law", "lifshits")


@dataclass(frozen=True)
class TailFitReport:
    parameters: dict
    residuals: dict
    selected: str
    E0: float
    points: int
    gaps: tuple = field(default=(), repr=False)

    @property
    def model(self):
        return self.selected

    def residual_ratio(self, a="lifshits", b="log-squared"):
        ra, rb = self.residuals[a], self.residuals[b]
        return math.inf if rb == 0.0 else ra / rb

    def to_dict(self):
        return {"selected": self.selected, "E0": self.E0, "points": self.points,
                "parameters": self.parameters, "residuals": self.residuals}


def _tail_data(estimate, E0, min_points=5, min_decades=2.0):
    g = np.asarray(estimate.energies, float) - E0
    N = np.asarray(estimate.n_values, float)
    ok = (g > 0.0) & (N > 0.0)
    g, N = g[ok], N[ok]
    if g.size < min_points:
        raise FitRefused(f"need at least {min_points} points with E > E0 and N > 0, got {g.size}")
    span = math.log10(g.max() / g.min())
    if span < min_decades - 1e-9:
        raise FitRefused(f"gaps span {span:.2f} decades, need {min_decades}")
    return g, N


def _lifshits_at(gamma, t, y):
    """Best (log c1, c2 >= 0) and SSR for fixed gamma; model y = a - c2 exp(gamma t)."""
    x = np.exp(gamma * t)
    A = np.column_stack([np.ones_like(x), -x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    if coef[1] < 0.0:
        coef = np.array([y.mean(), 0.0])
    r = y - A @ coef
    return coef, float(r @ r)


def fit_tail(estimate, E0):
    """Least squares in log N for the three tail families.

    log-squared: N = C / log^2(E - E0) with E0 held at the supplied value;
    power-law:   N = A (E - E0)^alpha;
    lifshits:    N = c1 exp(-c2 (E - E0)^gamma), c2 >= 0, -3 <= gamma < 0.
    """
    g, N = _tail_data(estimate, E0)
    t = np.log(g)
    y = np.log(N)
    params, ssr = {}, {}

    logC = float(np.mean(y + 2.0 * np.log(np.abs(t))))
    r = y - (logC - 2.0 * np.log(np.abs(t)))
    params["log-squared"] = {"C": math.exp(logC), "E0": float(E0)}
    ssr["log-squared"] = float(r @ r)

    A = np.column_stack([np.ones_like(t), t])
    (a, alpha), *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ np.array([a, alpha])
    params["power-law"] = {"amplitude": math.exp(a), "exponent": float(alpha)}
    ssr["power-law"] = float(r @ r)

    grid = np.linspace(-3.0, -1e-3, 600)
    vals = [_lifshits_at(gm, t, y)[1] for gm in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    best_g, best_v = float(grid[i]), vals[i]
    if hi > lo:
        res = minimize_scalar(lambda gm: _lifshits_at(gm, t, y)[1], bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-10})
        if res.fun <= best_v:
            best_g, best_v = float(res.x), float(res.fun)
    coef, best_v = _lifshits_at(best_g, t, y)
    params["lifshits"] = {"c1": math.exp(coef[0]), "c2": float(coef[1]), "gamma": best_g}
    ssr["lifshits"] = best_v

    selected = min(MODELS, key=lambda m: (ssr[m], MODELS.index(m)))
    return TailFitReport(params, ssr, selected, float(E0), int(g.size), tuple(g))


# -- exponent estimators -----------------------------------------------------------

@dataclass(frozen=True)
class ExponentEstimate:
    value: float
    band: tuple
    gaps: np.ndarray
    pointwise: np.ndarray

    @property
    def half_width(self):
        return 0.5 * (self.band[1] - self.band[0])


def lifshits_exponent(estimate, E0):
    """gamma = lim log(-log N) / log(E - E0), by linear extrapolation in 1/log(E - E0).

    Points with N <= 0 or N >= 1 are excluded with a warning.  The band adds
    the propagated Monte Carlo half-widths to the 95% regression interval.
    """
    g = np.asarray(estimate.energies, float) - E0
    N = np.asarray(estimate.n_values, float)
    hw = np.asarray(estimate.half_widths, float)
    if np.any(g <= 0.0):
        raise ValidationError("lifshits_exponent needs E > E0 at every grid point")
    ok = (N > 0.0) & (N < 1.0)
    if not ok.all():
        warnings.warn(f"excluding {int((~ok).sum())} point(s) with N outside (0, 1)",
                      RuntimeWarning, stacklevel=2)
    g, N, hw = g[ok], N[ok], hw[ok]
    if g.size < 2:
        raise FitRefused(f"need at least 2 points with 0 < N < 1, got {g.size}")
    t = np.log(g)
    with np.errstate(divide="ignore"):
        gam = np.log(-np.log(N)) / t
    s = 1.0 / t
    A = np.column_stack([np.ones_like(s), s])
    coef, *_ = np.linalg.lstsq(A, gam, rcond=None)
    # intercept as linear functional of the data
    w = np.linalg.pinv(A)[0]
    dgam = hw / (N * np.abs(np.log(N)) * np.abs(t))
    spread = float(np.sum(np.abs(w) * dgam))
    if g.size > 2:
        r = gam - A @ coef
        sigma2 = float(r @ r) / (g.size - 2)
        spread += Z95 * math.sqrt(sigma2 * float(w @ w))
    c = float(coef[0])
    return ExponentEstimate(c, (c - spread, c + spread), g, gam)


def holder_probe(estimate, E0, max_relative_error=0.5):
    """Slope of log N against log(E - E0) over the smallest resolvable decade.

    A point is resolvable when N > 0 and its half-width is at most
    ``max_relative_error`` times N.
    """
    g = np.asarray(estimate.energies, float) - E0
    N = np.asarray(estimate.n_values, float)
    hw = np.asarray(estimate.half_widths, float)
    if np.any(g <= 0.0):
        raise ValidationError("holder_probe needs E > E0 at every grid point")
    ok = (N > 0.0) & (hw <= max_relative_error * np.where(N > 0, N, 1.0))
    if not ok.all():
        warnings.warn(f"excluding {int((~ok).sum())} unresolved point(s)",
                      RuntimeWarning, stacklevel=2)
    g, N, hw = g[ok], N[ok], hw[ok]
    if g.size < 2:
        raise FitRefused(f"need at least 2 resolvable points, got {g.size}")
    sel = g <= 10.0 * g.min() * (1 + 1e-9)
    if sel.sum() < 2:
        raise FitRefused("fewer than 2 resolvable points within a decade of the smallest gap")
    g, N, hw = g[sel], N[sel], hw[sel]
    t, y = np.log(g), np.log(N)
    A = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    w = np.linalg.pinv(A)[1]
    spread = float(np.sum(np.abs(w) * hw / N))
    if g.size > 2:
        r = y - A @ coef
        spread += Z95 * math.sqrt(float(r @ r) / (g.size - 2) * float(w @ w))
    a = float(coef[1])
    return ExponentEstimate(a, (a - spread, a + spread), g, y)
