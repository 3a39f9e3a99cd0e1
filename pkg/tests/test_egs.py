import math
from fractions import Fraction

import pytest

from conftest import quiet
from permshift import ConstructionParams, Ordering, Variant
from permshift.egs import (
    EgsOrder,
    build_dj,
    build_egs,
    q_restriction,
    q_set,
    rigidity_deficiency,
    spectral_scan,
)
from permshift.construction import permuted_positions
from permshift.errors import LevelTooSmall
from permshift.intmath import perm_count


def test_q_sets():
    assert list(q_set(permuted_positions(16, Fraction(1, 2)))) == [2, 4]
    assert list(q_set(permuted_positions(4, Fraction(1, 2)))) == [2]
    with pytest.raises(LevelTooSmall):
        q_set(permuted_positions(2, Fraction(1, 2)))


def test_dj_sizes(t0, c25):
    assert len(build_dj(t0, 2).representatives) == 2
    d = build_dj(c25, 2)
    assert len(d.representatives) == d.expected_size == perm_count(5, 2) == 20
    c16 = quiet(ConstructionParams(Variant.MARKER, Fraction(1, 2), 12, 16, max_level=2))
    assert len(build_dj(c16, 2).representatives) == 12


def test_dj_injective(c25):
    d = build_dj(c25, 2)
    assert len({q_restriction(c25, 2, i) for i in d.representatives}) == len(d.representatives)
    # every Q-restriction pattern is represented
    all_patterns = {q_restriction(c25, 2, i) for i in range(1, 121)}
    assert len(all_patterns) == 20


def test_dj_needs_lower_level(t0):
    with pytest.raises(LevelTooSmall):
        build_dj(t0, 1)


def test_egs_ordering_places_d_words(c25_egs):
    c = c25_egs
    reps = set(build_dj(c, 2).representatives)
    assert all(c.slot_value(3, 1, s) in reps for s in c.gen(2).permuted)
    assert c.slot_value(3, 1, 1) == 1


def test_t0_egs_ordering():
    c = quiet(ConstructionParams(Variant.MARKER, Fraction(1, 2), 6, 4, Ordering.EGS_ORDERED))
    assert list(c.gen(2).order) == [1, 2]


def test_egs_order_arithmetic():
    pset = permuted_positions(24, Fraction(1, 2))
    order = EgsOrder(24, pset, [7, 3, 20, 12])
    assert sorted(order) == list(range(1, 25))
    assert [order.index_of(s) for s in pset] == [7, 3, 20, 12]
    assert all(order.position_of(order.index_of(p)) == p for p in range(1, 25))


def test_s_cardinalities(c25):
    seq = build_egs(c25, 3)
    assert seq.cardinalities == (25, 50, 250)
    assert seq.closed_forms[0] == 25 and seq.closed_forms[1] is None
    for j in (2, 3):
        assert seq.cardinalities[j - 1] == len(seq.q_sets[j - 2]) * seq.cardinalities[j - 2]
    assert all(int(s.max()) < c25.length(j) for j, s in enumerate(seq.sets, start=1))
    assert all((s[1:] > s[:-1]).all() for s in seq.sets)


def test_s_closed_form_even():
    c = quiet(ConstructionParams(Variant.MARKER, Fraction(1, 2), 16, 64))
    seq = build_egs(c, 3)
    assert seq.cardinalities[1] == 64 == seq.closed_forms[1]
    assert seq.cardinalities[2] == seq.closed_forms[2]


def test_upper_dimension(c25):
    seq = build_egs(c25, 4)
    assert 0.4 <= seq.upper_dimension_estimate <= 0.6


def test_spectral_basics(t0):
    d = spectral_scan(t0, ["001010"], length=4800, lags=[0, 24, 6], thetas=[0.0, 0.25])
    cy = d.cylinders[0]
    assert cy.autocorrelation[0] == cy.frequency
    assert cy.co_occurrence[1] == cy.occurrences
    assert math.isclose(cy.magnitudes[0], float(cy.frequency))
    assert 0 <= cy.empty_intersection_density <= 1


def test_plain_variant_has_empty_intersections():
    c = quiet(ConstructionParams(Variant.PLAIN, Fraction(1, 2), 6, 25, max_level=4))
    d = spectral_scan(c, [c.word(1, 3)], length=500_000, block_level=1, thetas=[0.0])
    assert d.cylinders[0].empty_intersection_density > 0.05


def test_rigidity_examples(t0, c25):
    assert rigidity_deficiency(t0, "001010", (2,), 4800).rows[0].deficiency == 0
    whole = rigidity_deficiency(c25, "", (1, 2, 3), 10_000)
    assert all(r.deficiency == 0 for r in whole.rows)
    rep = rigidity_deficiency(c25, c25.word(1, 1), (1, 2, 3), 200_000)
    assert rep.nonincreasing
    assert all(0 <= r.deficiency <= 2 * rep.frequency for r in rep.rows)
