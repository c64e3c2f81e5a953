import math

import numpy as np
import pytest

from conftest import E0_CENTRE, E0_CORNER, E0_CORNER_FD, PSI_CORNER, RHO
from rdmlab.cell import (Alternative, cell_pieces, classify_alternative, e0_landscape,
                         neumann_ground, neumann_ground_energy, neumann_ground_ratio,
                         tuned_alternative_ii)
from rdmlab.errors import NumericalFailure
from rdmlab.model import SingleSitePotential
from rdmlab.oracle import neumann_interval_ground
from rdmlab.verify import random_potential


def _fd_oracle(q, a, h=1e-4):
    v, l = cell_pieces(q, a)
    bp = np.concatenate([[-0.5], -0.5 + np.cumsum(l)])
    bp[-1] = 0.5
    return neumann_interval_ground(bp, v, h)


def test_free_cell():
    z = SingleSitePotential.zero()
    for a in (-0.25, 0.0, 0.1):
        assert abs(neumann_ground_energy(z, a)) < 1e-12
        s = neumann_ground_ratio(z, a)
        assert abs(s.ratio - 1.0) < 1e-12


def test_corner_below_centre(q, d):
    assert neumann_ground_energy(q, 0.0) > neumann_ground_energy(q, d)


def test_corner_value_against_oracle(q, d):
    e = neumann_ground_energy(q, d)
    assert e == pytest.approx(E0_CORNER, abs=1e-11)
    # the FD oracle frozen at h = 1e-4 agrees to its O(h^2) accuracy
    assert abs(e - E0_CORNER_FD) < 1e-7
    assert neumann_ground_energy(q, 0.0) == pytest.approx(E0_CENTRE, abs=1e-11)


@pytest.mark.slow
def test_corner_oracle_recomputed(q, d):
    assert abs(_fd_oracle(q, d) - E0_CORNER_FD) < 1e-12


def test_ratio_at_corner(q, d):
    s = neumann_ground_ratio(q, d)
    assert abs(s.ratio - 1.0) > 1e-6
    assert s.ratio == pytest.approx(RHO, rel=1e-10)
    assert s.boundary_values == pytest.approx(PSI_CORNER, rel=1e-9)
    # normalised eigenfunction: mirror cell swaps the boundary values
    m = neumann_ground_ratio(q, -d)
    assert m.ratio == pytest.approx(1 / RHO, rel=1e-10)


def test_random_potentials_vs_oracle():
    rng = np.random.default_rng(1)
    for _ in range(6):
        q = random_potential(rng)
        a = float(rng.uniform(-q.d_max, q.d_max))
        assert abs(neumann_ground_energy(q, a) - _fd_oracle(q, a)) < 5e-6


def test_extended_precision_agrees(q, d):
    e = neumann_ground_energy(q, d, dps=40)
    assert abs(float(e) - E0_CORNER) < 1e-13


def test_classification(q):
    assert classify_alternative(SingleSitePotential.zero()) is Alternative.II
    assert classify_alternative(q) is Alternative.I
    assert classify_alternative(SingleSitePotential.well(depth=+5.0)) is Alternative.I
    t = tuned_alternative_ii()
    assert classify_alternative(t) is Alternative.II
    assert min(v for v in t.values) < 0 < max(v for v in t.values)


def test_tuned_alternative_ii_is_flat():
    t = tuned_alternative_ii()
    land = e0_landscape(t, np.linspace(-t.d_max, t.d_max, 21))
    assert np.max(np.abs(land.energies)) <= 1e-8


def test_landscape_symmetry_and_extremes(q, d):
    grid = np.linspace(-d, d, 101)
    land = e0_landscape(q, grid)
    E = land.energies
    assert np.max(np.abs(E - E[::-1])) <= 1e-9
    assert np.argmax(E) == 50
    assert set(np.flatnonzero(E == E.min())) <= {0, 100}
    assert abs(E[0] - E[-1]) < 1e-12
    rows = list(land.rows())
    assert len(rows) == 101 and len(rows[0]) == 5


def test_zero_landscape():
    z = SingleSitePotential.zero()
    land = e0_landscape(z, np.linspace(-0.25, 0.25, 5))
    assert np.all(np.abs(land.energies) < 1e-12)


def test_ground_is_nodeless_and_free_interval():
    # a constant potential c has Neumann ground state exactly c
    assert abs(neumann_ground(np.array([3.0]), np.array([1.0])) - 3.0) < 1e-12
    e = neumann_ground(np.array([0.0, 0.0]), np.array([0.5, 0.5]))
    assert abs(e) < 1e-12


def test_strong_barrier_still_brackets():
    q = SingleSitePotential.well(depth=400.0)
    e = neumann_ground_energy(q, 0.1)
    assert 0 < e < 400 + math.pi ** 2
