import numpy as np
import pytest

from conftest import GAP_DIMER_09, GAP_L4_UNBALANCED, GAP_PLUS_PLUS, GAP_ZERO_PLUS
from rdmlab.cell import tuned_alternative_ii
from rdmlab.errors import AlternativeIIError, ValidationError
from rdmlab.minimizers import (classify_minimizers, enumerate_corner_configs,
                               interior_perturbation_check, is_balanced, necklace_count,
                               pattern_string)
from rdmlab.model import DisplacementConfig, dimer_config
from rdmlab.transfer import periodic_ground_energy


def test_enumeration_small():
    assert sorted(enumerate_corner_configs(1)) == [(-1,), (1,)]
    assert sorted(enumerate_corner_configs(2)) == [(-1, -1), (-1, 1), (1, 1)]


@pytest.mark.parametrize("L", range(1, 13))
def test_enumeration_matches_burnside(L):
    orbits = enumerate_corner_configs(L)
    assert len(orbits) == len(set(orbits)) == necklace_count(L)
    assert necklace_count(4) == 6


def test_enumeration_refuses_large():
    with pytest.raises(ValidationError, match="limit"):
        enumerate_corner_configs(21)


def test_l2(q):
    r = classify_minimizers(q, 2)
    assert r.minimizers == [(-1, 1)]
    assert r.energy_gaps[(-1, -1)] == pytest.approx(r.energy_gaps[(1, 1)], abs=1e-12)
    assert r.energy_gaps[(1, 1)] == pytest.approx(GAP_PLUS_PLUS, abs=1e-9)


def test_l3_has_no_minimizer(q):
    r = classify_minimizers(q, 3)
    assert r.minimizers == []
    assert min(r.energy_gaps.values()) > 1e-6


def test_l4(q):
    r = classify_minimizers(q, 4)
    assert sorted(r.minimizers) == [(-1, -1, 1, 1), (-1, 1, -1, 1)]
    assert r.energy_gaps[(-1, -1, -1, 1)] == pytest.approx(GAP_L4_UNBALANCED, abs=1e-9)
    d = r.to_dict()
    assert set(d["minimizers"]) == {"--++", "-+-+"}


def test_balanced_helpers():
    assert is_balanced((-1, 1, 1, -1)) and not is_balanced((1, 1, -1))
    assert pattern_string((-1, 1, 1)) == "-++"


def test_refuses_alternative_ii():
    with pytest.raises(AlternativeIIError, match="min"):
        classify_minimizers(tuned_alternative_ii(), 2)


def test_interior_examples(q, d):
    E0 = periodic_ground_energy(q, dimer_config(2, d))
    g1 = periodic_ground_energy(q, DisplacementConfig(np.array([0.0, d]), d, True)) - E0
    g2 = periodic_ground_energy(q, DisplacementConfig(np.array([-d, 0.9 * d]), d, True)) - E0
    g0 = periodic_ground_energy(q, dimer_config(2, d)) - E0
    assert g1 == pytest.approx(GAP_ZERO_PLUS, abs=1e-9) and g1 > 0
    assert g2 == pytest.approx(GAP_DIMER_09, abs=1e-9) and g2 > 0
    assert abs(g0) < 1e-12


def test_interior_check(q):
    rep = interior_perturbation_check(q, 4, 30, seed=1)
    assert rep.passed and rep.min_gap > 0
    again = interior_perturbation_check(q, 4, 30, seed=1)
    assert np.array_equal(rep.gaps, again.gaps)
