import math

import numpy as np
import pytest

from conftest import E0_CORNER
from rdmlab.cell import neumann_ground_energy
from rdmlab.counting import (count_below, finite_volume_ground, neumann_bracketing_bound,
                             periodic_count)
from rdmlab.errors import AmbiguousCount, ValidationError
from rdmlab.model import DisplacementConfig, SingleSitePotential, dimer_config, sample_config
from rdmlab.model import DisplacementDistribution
from rdmlab.oracle import box_tridiagonal, eigenvalues_below, oracle_count


@pytest.fixture(scope="module")
def free10():
    z = SingleSitePotential.zero()
    return z, DisplacementConfig(np.zeros(10), z.d_max)


def test_free_counts(free10):
    z, c = free10
    assert count_below(z, c, 1.0, "D").count == 3
    assert count_below(z, c, 0.0, "D").count == 0
    # Neumann: eigenvalues (k pi / 10)^2, k = 0, 1, ...
    assert count_below(z, c, 1.0, "N").count == 4


def test_free_ground(free10):
    z, c = free10
    assert abs(finite_volume_ground(z, c, "D") - (math.pi / 10) ** 2) <= 1e-9
    assert abs(finite_volume_ground(z, c, "N")) <= 1e-9


def test_ambiguous_at_eigenvalue(free10):
    z, c = free10
    with pytest.raises(AmbiguousCount):
        count_below(z, c, (math.pi / 10) ** 2, "D")


def test_bad_bc(free10):
    z, c = free10
    with pytest.raises(ValidationError):
        count_below(z, c, 1.0, "X")


def test_counts_vs_dense_oracle(q, d):
    rng = np.random.default_rng(2)
    h = 2e-4
    dist = DisplacementDistribution.symmetric_bernoulli(d)
    for seed in range(3):
        c = sample_config(dist, 6, seed)
        for bc in ("D", "N"):
            dd, ee = box_tridiagonal(q, c, h, bc)
            ev = eigenvalues_below(dd, ee, 80.0)
            tested = 0
            for E in rng.uniform(-9.0, 80.0, 30):
                if np.min(np.abs(ev - E)) < 1e-3:
                    continue
                tested += 1
                assert count_below(q, c, float(E), bc).count == int(np.sum(ev < E))
            assert tested > 20


def test_dimer_neumann_ground(q, d):
    g = finite_volume_ground(q, dimer_config(2, d), "N")
    assert abs(g - neumann_ground_energy(q, d)) <= 1e-8


def test_periodic_count_rule():
    # below the spectrum D > 2, nothing counted; inside bands the Dirichlet
    # count is corrected by the position of D relative to [-2, 2]
    assert periodic_count(0, 3.0) == 0
    assert periodic_count(1, 0.0) in (1, 2)


def test_periodic_ground(q, d):
    g = finite_volume_ground(q, dimer_config(4, d), "P")
    assert abs(g - E0_CORNER) < 1e-9


def test_bracketing_free():
    z = SingleSitePotential.zero()
    b = neumann_bracketing_bound(z, DisplacementConfig(np.zeros(4), z.d_max))
    assert abs(b.bound) < 1e-12 and abs(b.ground) < 1e-9


def test_bracketing_equality_at_corners(q, d):
    c = DisplacementConfig.from_signs([-1, 1, 1, -1, -1, 1], d, periodic=False)
    b = neumann_bracketing_bound(q, c)
    assert abs(b.bound - E0_CORNER) < 1e-11
    assert abs(b.ground - E0_CORNER) < 1e-8


def test_bracketing_strict_with_interior_site(q, d):
    c = DisplacementConfig(np.array([-d, d, 0.0, d]), d)
    b = neumann_bracketing_bound(q, c)
    assert abs(b.bound - min(b.cell_energies)) < 1e-15
    assert b.ground > b.bound + 1e-6
