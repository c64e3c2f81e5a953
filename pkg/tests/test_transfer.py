import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import E0_CORNER, GAP_PLUS_PLUS, RHO
from rdmlab.errors import NumericalFailure, ValidationError
from rdmlab.model import DisplacementConfig, SingleSitePotential, dimer_config
from rdmlab.oracle import periodic_eigenvalues
from rdmlab.transfer import (TransferMatrix, config_transfer, neumann_trace,
                             periodic_ground_energy, piece_propagator, random_walk_exponents)
from rdmlab.verify import random_potential


def rk4_propagator(v, length, E, h=1e-6):
    """Columns are the solutions with (u, u') = (1, 0) and (0, 1)."""
    n = int(round(length / h))
    h = length / n
    k = v - E
    # u'' = k u; integrate both columns at once
    y = np.array([[1.0, 0.0], [0.0, 1.0]])  # rows: u, u'
    A = np.array([[0.0, 1.0], [k, 0.0]])
    step = np.eye(2)
    # one RK4 step of a linear ODE is a fixed matrix polynomial in hA
    hA = h * A
    P = np.eye(2) + hA + hA @ hA / 2 + hA @ hA @ hA / 6 + hA @ hA @ hA @ hA / 24
    for _ in range(n):
        step = P @ step
    return step @ y


def test_shear_and_rotation():
    assert np.allclose(piece_propagator(0.0, 1.0, 0.0).matrix, [[1, 1], [0, 1]], atol=1e-15)
    assert np.allclose(piece_propagator(0.0, 1.0, math.pi ** 2).matrix, [[-1, 0], [0, -1]],
                       atol=1e-14)


def test_well_piece_against_rk4():
    m = piece_propagator(-10.0, 0.5, 0.0).matrix
    ref = rk4_propagator(-10.0, 0.5, 0.0)
    assert np.allclose(m, ref, rtol=1e-10, atol=1e-12)
    m = piece_propagator(3.0, 0.7, -20.0).matrix  # hyperbolic branch
    assert np.allclose(m, rk4_propagator(3.0, 0.7, -20.0, h=1e-5), rtol=1e-9)


def test_free_box_composition():
    z = SingleSitePotential.zero()
    T = config_transfer(z, DisplacementConfig(np.zeros(3), z.d_max), 0.0)
    assert np.allclose(math.exp(T.log_scale) * T.matrix, [[1, 3], [0, 1]], atol=1e-14)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.floats(-30, 100))
def test_unimodular(seed, L, E):
    rng = np.random.default_rng(seed)
    q = random_potential(rng)
    c = DisplacementConfig(rng.uniform(-q.d_max, q.d_max, L), q.d_max)
    assert config_transfer(q, c, E).det_residual() <= 1e-10


def test_matmul_matches_kernel(q, d):
    rng = np.random.default_rng(0)
    c1 = DisplacementConfig(rng.uniform(-d, d, 4), d)
    c2 = DisplacementConfig(rng.uniform(-d, d, 3), d)
    E = -3.0
    both = config_transfer(q, c1.concat(c2), E)
    prod = config_transfer(q, c2, E) @ config_transfer(q, c1, E)
    scale = math.exp(prod.log_scale - both.log_scale)
    assert np.allclose(prod.matrix * scale, both.matrix, rtol=1e-10)


def test_transfer_matrix_rejects_overflow():
    with pytest.raises(NumericalFailure):
        TransferMatrix(np.array([[1.0, np.nan], [0.0, 1.0]]), 0.0)


def test_periodic_ground_free():
    z = SingleSitePotential.zero()
    assert abs(periodic_ground_energy(z, DisplacementConfig(np.zeros(4), z.d_max, True))) < 1e-10


def test_periodic_requires_flag(q, d):
    with pytest.raises(ValidationError):
        periodic_ground_energy(q, DisplacementConfig(np.array([d]), d))


def test_dimer_equals_corner_cell(q, d):
    E0 = periodic_ground_energy(q, dimer_config(2, d))
    assert abs(E0 - E0_CORNER) <= 1e-8
    T = config_transfer(q, dimer_config(2, d), E0)
    assert abs(T.trace - 2.0) < 1e-8


def test_unbalanced_above_dimer(q, d):
    E0 = periodic_ground_energy(q, dimer_config(2, d))
    Epp = periodic_ground_energy(q, DisplacementConfig.from_signs([1, 1], d))
    assert Epp - E0 > 1e-6
    assert Epp - E0 == pytest.approx(GAP_PLUS_PLUS, abs=1e-9)
    # dense periodic oracle, O(h^2) accurate at h = 2e-4
    ref = periodic_eigenvalues(q, DisplacementConfig.from_signs([1, 1], d), 1)[0]
    assert abs(Epp - ref) < 1e-6


def test_free_trace():
    z = SingleSitePotential.zero()
    tr = neumann_trace(z, DisplacementConfig(np.zeros(5), z.d_max), 0.0)
    assert np.allclose(tr.u, 1.0) and np.allclose(tr.du, 0.0)


def test_walk_all_plus(q, d):
    c = DisplacementConfig.from_signs([1] * 5, d, periodic=False)
    tr = neumann_trace(q, c, E0_CORNER)
    assert random_walk_exponents(tr, RHO).tolist() == [1, 2, 3, 4, 5]


def test_walk_dimer(q, d):
    c = dimer_config(6, d)
    tr = neumann_trace(q, c, periodic_ground_energy(q, dimer_config(2, d)))
    assert random_walk_exponents(tr, RHO).tolist() == [-1, 0, -1, 0, -1, 0]
    assert np.allclose(tr.ratios(), [1 / RHO, RHO] * 3, rtol=1e-8)


def test_walk_matches_partial_sums(q, d):
    rng = np.random.default_rng(8)
    s = rng.choice([-1, 1], 50)
    c = DisplacementConfig.from_signs(s, d, periodic=False)
    E = neumann_ground_energy_mp(q, d)
    tr = neumann_trace(q, c, E, dps=60)
    assert np.array_equal(random_walk_exponents(tr, RHO), np.cumsum(s))


def neumann_ground_energy_mp(q, d):
    from rdmlab.cell import neumann_ground_energy
    return neumann_ground_energy(q, d, dps=60)


def test_walk_rejects_interior(q, d):
    c = DisplacementConfig(np.array([0.0, d]), d)
    tr = neumann_trace(q, c, E0_CORNER)
    with pytest.raises(ValidationError):
        random_walk_exponents(tr, RHO)
