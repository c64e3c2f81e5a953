"""Single-site potentials, displacement configurations and distributions.

A configuration of length ``L`` places a copy of the bump ``q`` at
``i + omega_i`` for ``i = 1..L``; the box is ``(1/2, L + 1/2)`` and cell ``i``
is ``(i - 1/2, i + 1/2)``.  Because ``r + d_max = 1/2`` every bump stays inside
its own cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, ValidationError

MERGE_TOL = 1e-12
# samples per counter block of the random stream; part of the stream layout,
# changing it changes every sampled configuration
BLOCK = 4096


@dataclass(frozen=True)
class SingleSitePotential:
    """Symmetric piecewise-constant bump supported in ``[-r, r]``.

    ``pieces`` is a tuple of ``(start, end, value)`` triples tiling
    ``[-r, r]`` from left to right.
    """

    support_radius: float
    pieces: tuple
    free: bool = False

    def __post_init__(self):
        r = float(self.support_radius)
        if not (0.0 < r < 0.5):
            raise GeometryError(f"support radius must lie in (0, 1/2), got {r}")
        pieces = tuple((float(a), float(b), float(v)) for a, b, v in self.pieces)
        if not pieces:
            raise ValidationError("potential needs at least one piece")
        object.__setattr__(self, "support_radius", r)
        object.__setattr__(self, "pieces", pieces)
        if abs(pieces[0][0] + r) > MERGE_TOL or abs(pieces[-1][1] - r) > MERGE_TOL:
            raise ValidationError(f"pieces must cover [-{r}, {r}] exactly")
        for (a, b, v), nxt in zip(pieces, pieces[1:] + (None,)):
            if not b > a:
                raise ValidationError(f"empty or reversed piece ({a}, {b})")
            if not math.isfinite(v):
                raise ValidationError("piece values must be finite")
            if nxt is not None and abs(nxt[0] - b) > MERGE_TOL:
                raise ValidationError(f"gap or overlap between pieces at x={b}")
        for (a, b, v), (a2, b2, v2) in zip(pieces, reversed(pieces)):
            if abs(a + b2) > MERGE_TOL or abs(b + a2) > MERGE_TOL or v != v2:
                raise ValidationError("potential must be mirror symmetric: q(x) = q(-x)")
        if not self.free and all(v == 0.0 for _, _, v in pieces):
            raise ValidationError("all piece values are zero; use SingleSitePotential.zero()")

    @classmethod
    def zero(cls, support_radius=0.25):
        r = support_radius
        return cls(r, ((-r, r, 0.0),), free=True)

    @classmethod
    def well(cls, depth=-10.0, support_radius=0.25):
        """Constant ``depth`` on ``[-r, r]``; ``well()`` is the canonical test potential."""
        r = support_radius
        return cls(r, ((-r, r, depth),))

    @classmethod
    def from_dict(cls, d):
        return cls(d["support_radius"], tuple(tuple(p) for p in d["pieces"]),
                   free=bool(d.get("free", False)))

    def to_dict(self):
        return {"support_radius": self.support_radius,
                "pieces": [list(p) for p in self.pieces], "free": self.free}

    @property
    def d_max(self):
        return 0.5 - self.support_radius

    @property
    def values(self):
        return np.array([v for _, _, v in self.pieces])

    @property
    def lengths(self):
        return np.array([b - a for a, b, _ in self.pieces])

    @property
    def inf(self):
        """Infimum over the real line (q vanishes outside its support)."""
        return min(0.0, float(self.values.min()))

    @property
    def sup(self):
        return max(0.0, float(self.values.max()))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        edges = np.array([a for a, _, _ in self.pieces] + [self.pieces[-1][1]])
        idx = np.searchsorted(edges, x, side="right") - 1
        inside = (idx >= 0) & (idx < len(self.pieces))
        vals = self.values[np.clip(idx, 0, len(self.pieces) - 1)]
        return np.where(inside, vals, 0.0)


@dataclass(frozen=True, eq=False)
class DisplacementConfig:
    displacements: np.ndarray
    d_max: float
    periodic: bool = False

    def __post_init__(self):
        om = np.array(self.displacements, dtype=float).reshape(-1)
        if om.size < 1:
            raise ValidationError("configuration needs L >= 1")
        if not np.all(np.isfinite(om)):
            raise ValidationError("displacements must be finite")
        d = float(self.d_max)
        if np.any(np.abs(om) > d + MERGE_TOL):
            raise GeometryError(f"displacement outside [-d_max, d_max] with d_max={d}")
        om = np.clip(om, -d, d)
        om.setflags(write=False)
        object.__setattr__(self, "displacements", om)
        object.__setattr__(self, "d_max", d)

    @property
    def L(self):
        return self.displacements.size

    @property
    def n_plus(self):
        return int(np.sum(self.displacements == self.d_max))

    @property
    def n_minus(self):
        return int(np.sum(self.displacements == -self.d_max))

    @property
    def is_corner(self):
        return self.n_plus + self.n_minus == self.L

    def repeat(self, k):
        return DisplacementConfig(np.tile(self.displacements, k), self.d_max, self.periodic)

    def concat(self, other):
        return DisplacementConfig(np.concatenate([self.displacements, other.displacements]),
                                  self.d_max, self.periodic)

    def to_dict(self):
        return {"displacements": self.displacements.tolist(), "d_max": self.d_max,
                "periodic": self.periodic}

    @classmethod
    def from_signs(cls, signs, d_max, periodic=True):
        return cls(np.asarray(signs, dtype=float) * d_max, d_max, periodic)

    def __eq__(self, other):
        return (isinstance(other, DisplacementConfig) and self.d_max == other.d_max
                and self.periodic == other.periodic
                and np.array_equal(self.displacements, other.displacements))

    def __hash__(self):
        return hash((self.displacements.tobytes(), self.d_max, self.periodic))


def check_geometry(q, config):
    if abs(q.support_radius + config.d_max - 0.5) > MERGE_TOL:
        raise GeometryError(
            f"non-overlap condition violated: r + d_max = "
            f"{q.support_radius + config.d_max} != 1/2")


def dimer_config(L, d_max):
    """Alternating corners ``omega_i = (-1)^i d_max``, ``i = 1..L``."""
    if L < 2 or L % 2:
        raise ValidationError(f"dimer configuration needs even L >= 2, got {L}")
    signs = np.array([(-1.0) ** i for i in range(1, L + 1)])
    return DisplacementConfig(signs * d_max, d_max, periodic=True)


@dataclass(frozen=True)
class AssembledPotential:
    breakpoints: np.ndarray
    values: np.ndarray
    domain: tuple

    @property
    def lengths(self):
        return np.diff(self.breakpoints)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        idx = np.clip(idx, 0, self.values.size - 1)
        return self.values[idx]


def assemble_potential(q, config):
    """Merged piecewise-constant ``V = sum_i q(x - i - omega_i)`` on ``(1/2, L+1/2)``."""
    check_geometry(q, config)
    edges = [0.5]
    vals = []
    for i, w in enumerate(config.displacements, start=1):
        c = i + w
        for a, b, v in q.pieces:
            lo, hi = c + a, c + b
            if lo - edges[-1] > MERGE_TOL:
                edges.append(lo)
                vals.append(0.0)
            else:
                edges[-1] = lo
            edges.append(hi)
            vals.append(v)
    end = config.L + 0.5
    if end - edges[-1] > MERGE_TOL:
        edges.append(end)
        vals.append(0.0)
    else:
        edges[-1] = end
    # merge equal neighbours
    out_e, out_v = [edges[0]], []
    for e, v in zip(edges[1:], vals):
        if out_v and out_v[-1] == v:
            out_e[-1] = e
        else:
            out_v.append(v)
            out_e.append(e)
    return AssembledPotential(np.array(out_e), np.array(out_v), (0.5, end))


# -- distributions and sampling -----------------------------------------------

KINDS = ("symmetric-bernoulli", "bernoulli", "uniform", "atoms")


@dataclass(frozen=True)
class DisplacementDistribution:
    kind: str
    d_max: float
    p: float = 0.5
    atoms: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "bernoulli" and not (0.0 < self.p < 1.0):
            raise ValidationError(f"bernoulli p must lie in (0, 1), got {self.p}")
        if self.kind == "atoms":
            atoms = tuple((float(x), float(w)) for x, w in self.atoms)
            if not atoms:
                raise ValidationError("atoms distribution needs at least one atom")
            if any(abs(x) > self.d_max + MERGE_TOL for x, _ in atoms):
                raise GeometryError("atom outside [-d_max, d_max]")
            if any(w <= 0 for _, w in atoms):
                raise ValidationError("atom weights must be positive")
            if abs(sum(w for _, w in atoms) - 1.0) > 1e-9:
                raise ValidationError("atom weights must sum to 1")
            object.__setattr__(self, "atoms", atoms)

    @classmethod
    def symmetric_bernoulli(cls, d_max):
        return cls("symmetric-bernoulli", d_max)

    @classmethod
    def uniform(cls, d_max):
        return cls("uniform", d_max)

    @classmethod
    def three_atom(cls, d_max):
        return cls("atoms", d_max, atoms=((-d_max, 1 / 3), (0.0, 1 / 3), (d_max, 1 / 3)))

    @classmethod
    def from_dict(cls, d, d_max):
        kind = d["kind"]
        return cls(kind, d_max, p=float(d.get("p", 0.5)),
                   atoms=tuple(tuple(a) for a in d.get("atoms", ())))

    def to_dict(self):
        out = {"kind": self.kind}
        if self.kind == "bernoulli":
            out["p"] = self.p
        if self.kind == "atoms":
            out["atoms"] = [list(a) for a in self.atoms]
        return out

    @property
    def support_has_corners(self):
        if self.kind == "atoms":
            xs = {x for x, _ in self.atoms}
            return self.d_max in xs and -self.d_max in xs
        return True

    def transform(self, u):
        """Map uniforms on [0, 1) to displacements."""
        d = self.d_max
        if self.kind == "symmetric-bernoulli":
            return np.where(u < 0.5, d, -d)
        if self.kind == "bernoulli":
            return np.where(u < self.p, d, -d)
        if self.kind == "uniform":
            return -d + 2.0 * d * u
        xs = np.array([x for x, _ in self.atoms])
        cw = np.cumsum([w for _, w in self.atoms])
        cw[-1] = 1.0
        return xs[np.searchsorted(cw, u, side="right")]


def stream_uniforms(seed, L, start, count, tag=0):
    """Uniforms for samples ``start .. start+count-1``, shape ``(count, L)``.

    Sample ``i`` reads ``L`` words at row ``i % BLOCK`` of the Philox block
    keyed by ``seed`` with counter ``[0, 0, i // BLOCK, tag]``, so each sample
    depends only on ``(seed, tag, L, i)`` and not on how the work is split.
    """
    if seed < 0:
        raise ValidationError("seed must be a non-negative integer")
    out = np.empty((count, L))
    i = start
    row = 0
    while row < count:
        block, r0 = divmod(i, BLOCK)
        n = min(count - row, BLOCK - r0)
        bg = np.random.Philox(key=int(seed), counter=[0, 0, block, tag])
        skip = r0 * L
        if skip:
            bg.advance(skip // 4)
            if skip % 4:
                bg.random_raw(skip % 4)
        raw = bg.random_raw(n * L)
        out[row:row + n] = ((raw >> np.uint64(11)) * (1.0 / 9007199254740992.0)).reshape(n, L)
        row += n
        i += n
    return out


def sample_displacements(dist, L, seed, start=0, count=1, tag=0):
    return dist.transform(stream_uniforms(seed, L, start, count, tag))


def sample_config(dist, L, seed):
    if L < 1:
        raise ValidationError("L must be >= 1")
    om = sample_displacements(dist, L, seed)[0]
    return DisplacementConfig(om, dist.d_max)
