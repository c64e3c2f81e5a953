"""Finite-difference eigenproblems for -Laplace + V on 2D period cells.

The grid is cell centred: a period cell of L1 x L2 unit cells, site (i1, i2)
centred at (i1, i2), is covered by squares of side h and the unknowns sit at
the square centres.  Neumann conditions use mirror ghost values, so the
discrete Laplacian annihilates constants exactly; ``bc='periodic'`` wraps
around instead.  The potential is sampled at the square centres, which is
second order when its jumps lie on grid lines.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh, splu

from .errors import GeometryError, NumericalFailure, ValidationError

MAX_UNKNOWNS = 10_000_000
SYM_TOL = 1e-12


@dataclass(frozen=True)
class SingleSitePotential2D:
    """Piecewise-constant bump on [-r, r]^2, symmetric in each coordinate.

    ``kind='product'``: ``edges`` tile [-r, r] (mirror symmetric) and
    ``values[i][j]`` is the value on edges-cell (i, j).
    ``kind='radial'``: ``edges`` are increasing radii ending at ``r`` and
    ``values[k]`` is the value for edges[k-1] <= |x| < edges[k].
    """

    support_radius: float
    kind: str
    edges: tuple
    values: tuple

    def __post_init__(self):
        r = float(self.support_radius)
        if not 0.0 < r < 0.5:
            raise GeometryError(f"support radius must lie in (0, 1/2), got {r}")
        edges = tuple(float(e) for e in self.edges)
        if self.kind == "product":
            vals = np.array(self.values, dtype=float)
            if abs(edges[0] + r) > SYM_TOL or abs(edges[-1] - r) > SYM_TOL:
                raise ValidationError("product edges must run from -r to r")
            if np.any(np.diff(edges) <= 0):
                raise ValidationError("edges must be increasing")
            if not np.allclose(edges, [-e for e in reversed(edges)], atol=SYM_TOL, rtol=0):
                raise ValidationError("product edges must be mirror symmetric")
            if vals.shape != (len(edges) - 1, len(edges) - 1):
                raise ValidationError("values must be a square table matching the edges")
            if not (np.array_equal(vals, vals[::-1]) and np.array_equal(vals, vals[:, ::-1])):
                raise ValidationError("values must be symmetric under x1 -> -x1 and x2 -> -x2")
            values = tuple(tuple(row) for row in vals.tolist())
        elif self.kind == "radial":
            if abs(edges[-1] - r) > SYM_TOL or edges[0] <= 0 or np.any(np.diff(edges) <= 0):
                raise ValidationError("radial edges must be increasing positive radii ending at r")
            if len(self.values) != len(edges):
                raise ValidationError("radial profile needs one value per radius")
            values = tuple(float(v) for v in self.values)
        else:
            raise ValidationError(f"kind must be 'product' or 'radial', got {self.kind!r}")
        if not np.all(np.isfinite(np.array(values, dtype=float))):
            raise ValidationError("values must be finite")
        object.__setattr__(self, "support_radius", r)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)

    @classmethod
    def square(cls, depth=-10.0, support_radius=0.125):
        """Constant ``depth`` on [-r, r]^2; ``square()`` is the canonical 2D bump."""
        r = support_radius
        return cls(r, "product", (-r, r), ((depth,),))

    @classmethod
    def zero(cls, support_radius=0.125):
        return cls.square(0.0, support_radius)

    @property
    def d_max(self):
        return 0.5 - self.support_radius

    @property
    def is_zero(self):
        return not np.any(np.array(self.values, dtype=float))

    @property
    def sign_definite(self):
        v = np.array(self.values, dtype=float)
        return (not self.is_zero) and (np.all(v <= 0) or np.all(v >= 0))

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = self.support_radius
        if self.kind == "product":
            e = np.array(self.edges)
            vals = np.array(self.values)
            inside = (np.abs(x) < r) & (np.abs(y) < r)
            i = np.clip(np.searchsorted(e, x, side="right") - 1, 0, vals.shape[0] - 1)
            j = np.clip(np.searchsorted(e, y, side="right") - 1, 0, vals.shape[1] - 1)
            return np.where(inside, vals[i, j], 0.0)
        rad = np.hypot(x, y)
        k = np.searchsorted(np.array(self.edges), rad, side="right")
        vals = np.append(np.array(self.values), 0.0)
        return vals[np.minimum(k, len(self.values))]


@dataclass(frozen=True)
class SparseGridOperator:
    matrix: sp.csr_matrix
    h: float
    cells: tuple
    points: tuple
    potential: np.ndarray
    bc: str

    @property
    def size(self):
        return self.matrix.shape[0]

    def __matmul__(self, u):
        return self.matrix @ u


def _laplacian_1d(n, h, bc):
    main = np.full(n, 2.0)
    off = np.full(n - 1, -1.0)
    T = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if bc == "neumann":
        T[0, 0] = 1.0
        T[n - 1, n - 1] = 1.0
    elif n > 2:
        T[0, n - 1] = -1.0
        T[n - 1, 0] = -1.0
    else:
        T = sp.lil_matrix(np.array([[2.0, -2.0], [-2.0, 2.0]]))
    return T.tocsr() / (h * h)


def assemble_2d(q2d, config, h, bc="neumann"):
    """5-point operator on an L1 x L2 period cell.

    ``config`` has shape (L1, L2, 2): the displacement of site (i1, i2).
    """
    if bc not in ("neumann", "periodic"):
        raise ValidationError(f"bc must be 'neumann' or 'periodic', got {bc!r}")
    om = np.asarray(config, dtype=float)
    if om.ndim != 3 or om.shape[2] != 2:
        raise ValidationError("2D configuration must have shape (L1, L2, 2)")
    d = q2d.d_max
    if np.any(np.abs(om) > d + 1e-12):
        raise GeometryError(f"displacement outside [-d_max, d_max]^2 with d_max = 1/2 - r = {d}")
    L1, L2 = om.shape[:2]
    m = int(round(1.0 / h))
    if m < 2 or abs(m * h - 1.0) > 1e-9:
        raise ValidationError(f"1/h must be an integer >= 2, got h = {h}")
    h = 1.0 / m
    n1, n2 = L1 * m, L2 * m
    if n1 * n2 > MAX_UNKNOWNS:
        raise ValidationError(f"grid has {n1 * n2} unknowns; the limit is {MAX_UNKNOWNS}")
    x = -0.5 + (np.arange(n1) + 0.5) * h
    y = -0.5 + (np.arange(n2) + 0.5) * h
    X, Y = np.meshgrid(x, y, indexing="ij")
    V = np.zeros((n1, n2))
    for i1 in range(L1):
        for i2 in range(L2):
            cx, cy = i1 + om[i1, i2, 0], i2 + om[i1, i2, 1]
            sl = (slice(i1 * m, (i1 + 1) * m), slice(i2 * m, (i2 + 1) * m))
            V[sl] += q2d(X[sl] - cx, Y[sl] - cy)
    A = (sp.kron(_laplacian_1d(n1, h, bc), sp.identity(n2))
         + sp.kron(sp.identity(n1), _laplacian_1d(n2, h, bc))
         + sp.diags(V.ravel()))
    return SparseGridOperator(A.tocsr(), h, (L1, L2), (n1, n2), V, bc)


@dataclass(frozen=True)
class EigenResult:
    value: float
    vector: np.ndarray
    residual_norm: float
    iterations: int


def smallest_eigenpair(op, tol=1e-8, maxiter=None):
    """Smallest eigenpair by shift-invert Lanczos with the shift below min V.

    ``iterations`` counts applications of the shifted inverse.  The returned
    eigenvalue is the Rayleigh quotient of the (positive) eigenvector.
    """
    A = op.matrix
    sigma = float(op.potential.min()) - 1.0
    lu = splu((A - sigma * sp.identity(A.shape[0], format="csc")).tocsc())
    calls = [0]

    def solve(b):
        calls[0] += 1
        return lu.solve(np.asarray(b, dtype=float))

    OPinv = LinearOperator(A.shape, matvec=solve, dtype=float)
    try:
        vals, vecs = eigsh(A, k=1, sigma=sigma, which="LM", OPinv=OPinv,
                           maxiter=maxiter, tol=0)
    except Exception as exc:  # ArpackNoConvergence and friends
        raise NumericalFailure(f"eigensolver failed after {calls[0]} solves: {exc}") from exc
    v = vecs[:, 0]
    v = v * (1.0 if v.sum() >= 0 else -1.0)
    v = v / np.linalg.norm(v)
    Av = A @ v
    lam = float(v @ Av)
    res = float(np.linalg.norm(Av - lam * v))
    if res > tol:
        raise NumericalFailure(
            f"residual {res:.3e} exceeds tolerance {tol:.1e} after {calls[0]} solves "
            f"(lambda = {lam!r}, n = {A.shape[0]})")
    if v.min() < -1e-10 * v.max():
        raise NumericalFailure("ground state is not sign definite")
    return EigenResult(lam, v, res, calls[0])


def lowest_eigenvalues(op, k):
    sigma = float(op.potential.min()) - 1.0
    vals = eigsh(op.matrix, k=k, sigma=sigma, which="LM", return_eigenvectors=False)
    return np.sort(vals)


def single_cell(a):
    return np.array(a, dtype=float).reshape(1, 1, 2)


def cell_ground_energy(q2d, a, h, tol=1e-8):
    return smallest_eigenpair(assemble_2d(q2d, single_cell(a), h), tol).value


@dataclass(frozen=True)
class Landscape2D:
    a_grid: np.ndarray
    energies: np.ndarray

    def symmetry_defect(self):
        e = self.energies
        return float(max(np.abs(e - e[::-1, :]).max(), np.abs(e - e[:, ::-1]).max()))

    def rows(self):
        for i, a1 in enumerate(self.a_grid):
            for j, a2 in enumerate(self.a_grid):
                yield float(a1), float(a2), float(self.energies[i, j])


def e0_2d_landscape(q2d, a_grid, h=1 / 64, check=True):
    """Cell Neumann ground energies on the product grid a_grid x a_grid.

    For a sign-definite bump with a symmetric grid containing 0, ``check``
    requires the maximum at (0, 0) and the minimum at the four corners.
    """
    a = np.asarray(a_grid, dtype=float)
    E = np.array([[cell_ground_energy(q2d, (a1, a2), h) for a2 in a] for a1 in a])
    land = Landscape2D(a, E)
    if check and q2d.sign_definite and a.size > 1:
        far = np.abs(a) == np.abs(a).max()
        corners = E[np.ix_(far, far)]
        near = np.abs(a) == np.abs(a).min()
        centre = E[np.ix_(near, near)]
        if centre.min() < E.max() - 1e-9 or corners.max() > E.min() + 1e-9:
            raise NumericalFailure("2D landscape is not maximal at the centre and minimal at the corners")
    return land


# -- sign-pattern corner configurations on the 2 x 2 period cell -----------------

SIGN_PAIRS = ((-1, -1), (-1, 1), (1, -1), (1, 1))


def pattern_config(s1, s2, d):
    """omega_(i1, i2) = (s1[i1] d, s2[i2] d) for i1, i2 in {0, 1}."""
    om = np.empty((2, 2, 2))
    for i1, i2 in itertools.product(range(2), range(2)):
        om[i1, i2] = (s1[i1] * d, s2[i2] * d)
    return om


def pattern_name(s1, s2):
    f = lambda s: "".join("+" if x > 0 else "-" for x in s)
    return f"{f(s1)}/{f(s2)}"


def is_dimer(s1, s2):
    """Alternating in both directions (the dimer and its translates)."""
    return s1[0] == -s1[1] and s2[0] == -s2[1]


@dataclass(frozen=True)
class Comparison2D:
    rows: list
    h: float
    dimer_energy: float
    competitor: str
    margin: float
    error_estimate: float
    status: str

    @property
    def conclusive(self):
        return self.status == "ok"

    def to_dict(self):
        return {"h": self.h, "dimer_energy": self.dimer_energy, "competitor": self.competitor,
                "margin": self.margin, "error_estimate": self.error_estimate,
                "status": self.status, "rows": self.rows}


def compare_2d_configs(q2d, h, bc="neumann", factor=5.0, tol=1e-8, require_small_support=True):
    """Ground energies of all 16 sign patterns on the 2 x 2 cell at h and h/2.

    Under Neumann conditions the four alternating patterns are translates of
    one another and tie exactly; they are grouped as the dimer and compared
    with the lowest non-dimer pattern.  The margin (extrapolated) must exceed
    ``factor`` times the sum of both Richardson error estimates
    (4/3)|lambda_h - lambda_{h/2}|, else the status is ``'inconclusive'``.
    """
    if require_small_support and not q2d.support_radius < 0.25:
        raise ValidationError("the 2D minimizer comparison assumes support radius r < 1/4")
    d = q2d.d_max
    rows = []
    for s1, s2 in itertools.product(SIGN_PAIRS, SIGN_PAIRS):
        om = pattern_config(s1, s2, d)
        lh = smallest_eigenpair(assemble_2d(q2d, om, h, bc), tol).value
        lh2 = smallest_eigenpair(assemble_2d(q2d, om, h / 2, bc), tol).value
        rows.append({"pattern": pattern_name(s1, s2), "dimer": is_dimer(s1, s2),
                     "lambda_h": lh, "lambda_h2": lh2,
                     "extrapolated": (4.0 * lh2 - lh) / 3.0,
                     "error": 4.0 / 3.0 * abs(lh - lh2)})
    dimers = [r for r in rows if r["dimer"]]
    others = [r for r in rows if not r["dimer"]]
    best_dimer = min(dimers, key=lambda r: r["extrapolated"])
    comp = min(others, key=lambda r: r["extrapolated"])
    for r in rows:
        r["margin"] = r["extrapolated"] - best_dimer["extrapolated"]
    margin = comp["extrapolated"] - best_dimer["extrapolated"]
    err = max(r["error"] for r in dimers) + comp["error"]
    # the dimer translates must agree among themselves to within their error
    spread = max(r["extrapolated"] for r in dimers) - best_dimer["extrapolated"]
    ok = margin > factor * err and margin > factor * spread
    rows.sort(key=lambda r: (r["extrapolated"], r["pattern"]))
    return Comparison2D(rows, float(h), best_dimer["extrapolated"], comp["pattern"],
                        float(margin), float(err), "ok" if ok else "inconclusive")
