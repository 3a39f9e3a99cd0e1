import math
import random
from fractions import Fraction

import pytest

from conftest import quiet
from permshift import ConstructionParams, Variant, WordRef
from permshift.ergodic import (
    XhatCriteria,
    atom_size_profile,
    chain_law,
    chain_lengths,
    chain_structure,
    chain_word,
    decompose,
    empirical_block_entropy,
    exact_aligned_measure,
    measure_estimate,
    permuted_block_fraction,
    return_time,
    return_times,
    word_index,
    xhat_levels,
    xhat_member,
)
from permshift.errors import BudgetExceeded, NotInLanguage, VariantUnsupported, WindowTooShort


def test_decompose_examples(t0):
    w = t0.limit_prefix(96)
    d = decompose(t0, w[:24], 1)
    assert (d.start_offset, d.blocks, d.valid_phases) == (0, (1, 2, 3, 4), 1)
    d = decompose(t0, w[3:27], 1)
    assert (d.start_offset, d.blocks, d.residues) == (3, (2, 3, 4), (3, 3))
    assert d.reconstruct(t0) == w[3:27]
    assert decompose(t0, w[3:30], 1).blocks == (2, 3, 4, 1)
    with pytest.raises(NotInLanguage):
        decompose(t0, "1" * 24, 1)
    with pytest.raises(WindowTooShort):
        decompose(t0, w[:11], 1)


def test_decompose_rejects_plain():
    c = quiet(ConstructionParams(Variant.PLAIN, Fraction(1, 2), 4, 4))
    with pytest.raises(VariantUnsupported):
        decompose(c, c.limit_prefix(16), 1)


@pytest.mark.parametrize("j", [1, 2])
def test_decompose_random_windows(c25, w25, j):
    rng = random.Random(j)
    lj = c25.length(j)
    for _ in range(50):
        s = rng.randrange(0, len(w25) - 2 * lj)
        d = decompose(c25, w25[s:s + 2 * lj], j)
        assert d.valid_phases == 1
        assert (s + d.start_offset) % lj == 0
        assert d.reconstruct(c25) == w25[s:s + 2 * lj]


def test_decompose_virtual_level(c25_egs):
    w = c25_egs.limit_prefix(400_000)
    d = decompose(c25_egs, w[1234:1234 + 150_000], 3)
    assert d.valid_phases == 1 and d.start_offset == 75000 - 1234
    assert d.reconstruct(c25_egs) == w[1234:1234 + 150_000]


def test_decompose_spacer(c25_spacer):
    w = c25_spacer.limit_prefix(200_000)
    rng = random.Random(4)
    for _ in range(20):
        s = rng.randrange(0, len(w) - 1258)
        d = decompose(c25_spacer, w[s:s + 1258], 2)
        assert d.valid_phases == 1 and d.reconstruct(c25_spacer) == w[s:s + 1258]


def test_corrupted_windows_rejected(c25, w25):
    rng = random.Random(11)
    for _ in range(50):
        s = rng.randrange(0, len(w25) - 1250)
        win = list(w25[s:s + 1250])
        i = rng.randrange(1250)
        win[i] = "1" if win[i] == "0" else "0"
        with pytest.raises(NotInLanguage):
            decompose(c25, "".join(win), 2)


def test_word_index_virtual(c25):
    assert word_index(c25, 3, c25.word(3, 5040)) == 5040
    assert word_index(c25, 3, c25.word(3, 1)[::-1]) is None


def test_measure_examples(t0):
    m = measure_estimate(t0, "001010", 480)
    assert m.frequency == Fraction(20, 475) and m.aligned_only and m.occurrence_count == 20
    assert m.below_floor
    zeros = t0.limit_prefix(48).count("0")
    assert measure_estimate(t0, "0", 48).frequency == Fraction(zeros, 48)


def test_000_frequency(t0):
    # T0 has 000 (u1 ends in 0); a seed table without a trailing 0 has none
    assert measure_estimate(t0, "000", 4800).frequency > 0
    c = quiet(ConstructionParams(Variant.MARKER, Fraction(1, 2), 7, 4), seeds=["0010101", "0010111", "0011011", "0011101"])
    assert measure_estimate(c, "000", c.length(c.max_level)).frequency == 0


def test_exact_aligned_measure(t0, c25, w25):
    assert exact_aligned_measure(t0, WordRef(1, 1)) == Fraction(1, 24)
    assert exact_aligned_measure(t0, [WordRef(1, 3)]) == Fraction(1, 24)
    assert measure_estimate(t0, t0.word(1, 3), 4800).aligned_frequency == Fraction(1, 24)
    for idx in (1, 2, 7, 25):
        assert exact_aligned_measure(c25, WordRef(1, idx)) == Fraction(1, 625)
        assert measure_estimate(c25, c25.word(1, idx), 62500, w25).aligned_frequency == Fraction(1, 625)
    with pytest.raises(ValueError):
        exact_aligned_measure(c25, [WordRef(1, 5), WordRef(1, 7)])


def test_aligned_measure_needs_marker():
    c = quiet(ConstructionParams(Variant.PLAIN, Fraction(1, 2), 4, 4))
    with pytest.raises(VariantUnsupported):
        exact_aligned_measure(c, WordRef(1, 1))


def test_return_time_examples(t0, c25):
    r = return_time(t0, 0, 6)
    assert r.return_time == 24 and r.residue(6) == 0
    assert return_time(t0, 0, 1).return_time <= 3
    assert return_time(c25, 4 * 25, 50).return_time == 625


def test_return_time_budget(c25):
    with pytest.raises(BudgetExceeded) as exc:
        return_time(c25, 4 * 25, 50, budget=600)
    assert exc.value.lower_bound == 600


def test_return_times_monotone(c25):
    rng = random.Random(2)
    for _ in range(5):
        t = rng.randrange(0, 500_000)
        rs = [r.return_time for r in return_times(c25, t, range(1, 200))]
        assert all(a <= b for a, b in zip(rs, rs[1:]))


def test_chain_examples(t0, c25):
    cs = chain_structure(t0, 13, 1)
    assert cs.chains == (1, 1) and cs.trailing_run == 0
    assert (cs.permuted_flag, cs.p, cs.q) == (False, 1, 1)
    assert chain_law(4) == (1, 1, 4, 6) and sum(chain_law(4)) == 16 - 4
    assert chain_lengths(c25, 1) == ((1, 1, 4, 6, 8), 0)
    cs = chain_structure(c25, 25 * 11 + 2, 1)
    assert (cs.slot, cs.p, cs.q) == (12, 6, 3) and cs.total == 25


def test_chain_census_level2(c25):
    runs, trailing = chain_lengths(c25, 2)
    assert runs == chain_law(10) and trailing == 120 - 100
    assert sum(runs) + trailing + 10 == 120


def test_xhat(c25):
    with pytest.raises(ValueError):
        XhatCriteria(Fraction(1, 2))
    # slot 18 of the chain 17..24: p = 8 > 25^(3/8), p - q = 7 > 25^(1/4)
    t = 25 * 17
    assert xhat_levels(c25, t, XhatCriteria(J=1)) == [(1, True)]
    assert not xhat_member(c25, 25, XhatCriteria(J=1))


def test_permuted_block_fraction(c25):
    assert permuted_block_fraction(c25, 1, 62500) == Fraction(5, 25)


def test_atom_and_entropy(t0):
    rows = atom_size_profile(t0, [0], [6], [0, 0.5], 48_000)
    mu = rows[0].mu
    assert math.isclose(float(mu), 1 / 24, rel_tol=1e-3)
    assert rows[0].values[0] == (0, -math.log(mu))
    assert math.isclose(rows[0].values[1][1], -math.log(mu) / math.sqrt(6))
    h = dict(empirical_block_entropy(t0, 2, 4800))
    p0 = t0.limit_prefix(4800).count("0") / 4800
    assert math.isclose(h[1], -(p0 * math.log(p0) + (1 - p0) * math.log(1 - p0)))


def test_chain_word(c25):
    assert chain_word(c25, [WordRef(1, 5), WordRef(1, 6)]) == c25.word(1, 5) + c25.word(1, 6)
