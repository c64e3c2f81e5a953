"""Quick invariant suite behind ``rdmlab verify``.

Each check returns (name, passed, detail).  The suite covers the free
potential identities, unimodularity of transfer matrices, the trace identity
at the dimer, cell-solver agreement with the dense oracle and count
agreement with the oracle on small random boxes.
"""
from __future__ import annotations

import math

import numpy as np

from .cell import cell_pieces, classify_alternative, Alternative, neumann_ground_energy
from .counting import count_below, finite_volume_ground
from .model import DisplacementConfig, SingleSitePotential, dimer_config
from .oracle import eigenvalues_below, box_tridiagonal, neumann_interval_ground
from .transfer import config_transfer, periodic_ground_energy, piece_propagator


def random_potential(rng, r=None, max_pieces=3):
    """Random symmetric piecewise-constant bump (used by checks and tests)."""
    r = float(rng.uniform(0.1, 0.45)) if r is None else r
    k = int(rng.integers(1, max_pieces + 1))
    cuts = np.sort(rng.uniform(0.0, r, k - 1))
    edges = np.concatenate([[0.0], cuts, [r]])
    vals = rng.uniform(-20.0, 20.0, k)
    # right half from the centre outwards; the innermost piece straddles 0
    half = [(edges[i], edges[i + 1], vals[i]) for i in range(k)]
    left = [(-b, -a, v) for a, b, v in reversed(half[1:])]
    pieces = left + [(-edges[1], edges[1], vals[0])] + half[1:]
    return SingleSitePotential(r, tuple(pieces))


def _free_identities():
    out = []
    m = piece_propagator(0.0, 1.0, 0.0).matrix
    out.append(("shear at E = v", bool(np.allclose(m, [[1, 1], [0, 1]], atol=1e-15)), m.tolist()))
    m = piece_propagator(0.0, 1.0, math.pi ** 2).matrix
    out.append(("half-period rotation", bool(np.allclose(m, [[-1, 0], [0, -1]], atol=1e-14)), m.tolist()))
    z = SingleSitePotential.zero()
    c = DisplacementConfig(np.zeros(10), z.d_max)
    n = count_below(z, c, 1.0, "D").count
    out.append(("free Dirichlet count floor(10/pi)", n == 3, n))
    g = finite_volume_ground(z, c, "D")
    out.append(("free Dirichlet ground (pi/10)^2", abs(g - (math.pi / 10) ** 2) <= 1e-9, g))
    e = periodic_ground_energy(z, DisplacementConfig(np.zeros(3), z.d_max, True))
    out.append(("free periodic ground 0", abs(e) <= 1e-10, e))
    return out


def _unimodularity(rng, instances):
    worst = 0.0
    for _ in range(instances):
        q = random_potential(rng)
        L = int(rng.integers(1, 20))
        c = DisplacementConfig(rng.uniform(-q.d_max, q.d_max, L), q.d_max)
        E = float(rng.uniform(-25.0, 60.0))
        worst = max(worst, config_transfer(q, c, E).det_residual())
    return [("det T = 1", bool(worst <= 1e-10), float(worst))]


def _dimer_trace():
    q = SingleSitePotential.well()
    c = dimer_config(2, q.d_max)
    E0 = periodic_ground_energy(q, c)
    tr = config_transfer(q, c, E0).trace
    cell = neumann_ground_energy(q, q.d_max)
    return [("tr T = 2 at the dimer", abs(tr - 2.0) <= 1e-8, tr),
            ("periodic E0 = cell E0(d_max)", abs(E0 - cell) <= 1e-8, E0 - cell),
            ("canonical q in alternative (i)", classify_alternative(q) is Alternative.I, None)]


def _cell_oracle(rng, instances):
    worst = 0.0
    for _ in range(instances):
        q = random_potential(rng)
        a = float(rng.uniform(-q.d_max, q.d_max))
        vals, lens = cell_pieces(q, a)
        bp = np.concatenate([[-0.5], -0.5 + np.cumsum(lens)])
        bp[-1] = 0.5
        worst = max(worst, abs(neumann_ground_energy(q, a) - neumann_interval_ground(bp, vals, 1e-4)))
    return [("cell E0 vs dense oracle", worst <= 5e-6, worst)]


def _count_oracle(rng, instances, h=2e-4):
    bad = 0
    tested = 0
    for _ in range(instances):
        q = random_potential(rng, max_pieces=2)
        L = int(rng.integers(1, 5))
        c = DisplacementConfig(rng.uniform(-q.d_max, q.d_max, L), q.d_max)
        for bc in ("D", "N"):
            d, e = box_tridiagonal(q, c, h, bc)
            ev = eigenvalues_below(d, e, 60.0)
            lo = float(d.min()) - 2.0 / h ** 2 - 1.0
            for E in rng.uniform(lo, 60.0, 4):
                E = float(E)
                if ev.size and np.min(np.abs(ev - E)) < 1e-3:
                    continue
                tested += 1
                bad += count_below(q, c, E, bc).count != int(np.sum(ev < E))
    return [("counts vs dense oracle", bad == 0, f"{bad} mismatches in {tested}")]


def run_suite(instances=10, seed=0):
    rng = np.random.default_rng(seed)
    checks = []
    checks += _free_identities()
    checks += _unimodularity(rng, 10 * instances)
    checks += _dimer_trace()
    checks += _cell_oracle(rng, instances)
    checks += _count_oracle(rng, max(1, instances // 2))
    return checks
