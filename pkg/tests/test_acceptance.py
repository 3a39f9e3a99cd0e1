"""Acceptance suite: twelve criteria at their stated tolerances.

Each criterion is a function returning (passed, detail).  The pytest wrappers
assert on it; a one-line PASS/FAIL summary per criterion is printed at the end
of the session (see conftest.py), and running this file directly prints the
same lines.
"""

from __future__ import annotations

import random
import sys
import time
import warnings
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from permshift import ConstructionParams, Variant  # noqa: E402
from permshift.complexity import (  # noqa: E402
    check_complexity_bounds,
    estimate_entropy_dimension,
    exp_power_profile,
    language_profile,
)
from permshift.construction import SPACER, Construction, DegenerateWarning, build  # noqa: E402
from permshift.egs import build_egs, rigidity_deficiency  # noqa: E402
from permshift.ergodic import (  # noqa: E402
    chain_law,
    chain_lengths,
    chain_structure,
    decompose,
    measure_estimate,
    permuted_block_fraction,
    return_times,
)
from permshift.errors import NotInLanguage  # noqa: E402
from permshift.factors import build_factor_index, count_factors, count_factors_bruteforce  # noqa: E402

RESULTS: dict[int, tuple[bool, str]] = {}

T0 = ConstructionParams(Variant.MARKER, Fraction(1, 2), 6, 4)
P25 = ConstructionParams(Variant.MARKER, Fraction(1, 2), 25, 25, max_level=4)
PREFIX = 1_000_000


def _fresh(params: ConstructionParams) -> Construction:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateWarning)
        return Construction(params)


def _c25() -> Construction:
    return build(P25)


_W: dict[str, str] = {}


def _w25() -> str:
    if "w" not in _W:
        _W["w"] = _c25().limit_prefix(PREFIX)
    return _W["w"]


def _chain_starts(c: Construction) -> list[tuple[int, int]]:
    """(slot, length) of the unpermuted level-1 chains."""
    pset = c.gen(1).permuted
    starts, s = [], 1
    while s <= c.count(1):
        if s in pset:
            s += 1
            continue
        e = s
        while e + 1 <= c.count(1) and e + 1 not in pset:
            e += 1
        starts.append((s, e - s + 1))
        s = e + 1
    return starts


# -- criteria ------------------------------------------------------------------------------


def criterion_1() -> tuple[bool, str]:
    start = time.perf_counter()
    c = _fresh(ConstructionParams(Variant.MARKER, Fraction(1, 2), 25, 25, max_level=3))
    words = c.gen(2).words
    elapsed = time.perf_counter() - start
    got = (c.count(2), c.length(2), c.count(3), c.length(3))
    ok = got == (120, 625, 3628800, 75000) and len(words) == 120 and len(set(words)) == 120 and elapsed < 5
    return ok, f"(N2, l2, N3, l3) = {got}, |C_2| = {len(set(words))} distinct, {elapsed:.2f}s"


def criterion_2() -> tuple[bool, str]:
    start = time.perf_counter()
    t0 = build(T0)
    c = _c25()
    families = {
        "T0 C_1": list(t0.gen(1).words),
        "T0 C_2": list(t0.gen(2).words),
        "T0 w[0,2400)": [t0.limit_prefix(2400)],
        "25 C_1": list(c.gen(1).words),
        "25 C_2 + w[0,l_3)": list(c.gen(2).words) + [c.limit_prefix(c.length(3))],
    }
    bad = []
    for name, fam in families.items():
        sam = count_factors(build_factor_index(fam), 1250).counts
        brute = count_factors_bruteforce(fam, 1250).counts
        if sam != brute:
            bad.append(name)
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 60
    return ok, f"{len(families)} families, n <= 1250, mismatches: {bad or 'none'}, {elapsed:.1f}s"


def criterion_3() -> tuple[bool, str]:
    c = _c25()
    prof = language_profile(c, 24 * 25)
    report = check_complexity_bounds(prof, c, levels=[1])
    rows = [r for r in report.rows if 1 <= r.k < 25]
    lower_bad = [r.k for r in rows if r.count < r.lower]
    upper_bad = [r.k for r in rows if r.count > r.upper]
    ok = len(rows) == 24 and not lower_bad and not upper_bad
    detail = f"lower violated at k={lower_bad or 'none'}; upper violated at k={upper_bad or 'none'}"
    if upper_bad:
        r = next(r for r in rows if r.k == upper_bad[0])
        detail += f" (first: |B_{r.length}| = {r.count} > {r.upper})"
    return ok, detail


def criterion_4() -> tuple[bool, str]:
    c, w = _c25(), _w25()
    violations = 0
    checked = 0
    for j in (1, 2):
        lj = c.length(j)
        for u in c.gen(j).words:
            pos = w.find(u)
            while pos != -1:
                checked += 1
                violations += pos % lj != 0
                pos = w.find(u, pos + 1)
    return violations == 0, f"{checked} occurrences of C_1/C_2 words in w[0,10^6), {violations} misaligned"


def criterion_5() -> tuple[bool, str]:
    c, w = _c25(), _w25()
    rng = random.Random(20240501)
    size = 2 * c.length(2)
    good = 0
    for _ in range(100):
        s = rng.randrange(0, len(w) - size)
        win = w[s:s + size]
        d = decompose(c, win, 2)
        good += d.valid_phases == 1 and d.reconstruct(c) == win and (s + d.start_offset) % c.length(2) == 0
    rejected = 0
    bad_windows = []
    for _ in range(50):
        s = rng.randrange(0, len(w) - size)
        win = list(w[s:s + size])
        i = rng.randrange(size)
        win[i] = "1" if win[i] == "0" else "0"
        bad_windows.append("".join(win))
    bad_windows += ["".join(rng.choice("01") for _ in range(size)) for _ in range(50)]
    for win in bad_windows:
        try:
            decompose(c, win, 2)
        except NotInLanguage:
            rejected += 1
    ok = good == 100 and rejected == len(bad_windows)
    return ok, f"{good}/100 windows unique + byte-identical; {rejected}/{len(bad_windows)} ill-formed rejected"


def criterion_6() -> tuple[bool, str]:
    c, w = _c25(), _w25()
    worst = 0.0
    exact = True
    for slot, length in _chain_starts(c):
        chain = "".join(c.word(1, s) for s in range(slot, slot + length))
        first = c.word(1, slot)
        mc = measure_estimate(c, chain, PREFIX, w)
        mf = measure_estimate(c, first, PREFIX, w)
        worst = max(worst, abs(float(mc.frequency) / float(mf.frequency) - 1))
        exact &= mc.aligned_frequency == Fraction(1, 625) == mf.aligned_frequency
    ok = worst <= 0.02 and exact
    return ok, f"max relative gap {worst:.2e}; aligned counts give 1/625 exactly: {exact}"


def criterion_7() -> tuple[bool, str]:
    c = _c25()
    l1, l2 = c.length(1), c.length(2)
    rng = random.Random(7)
    chains = [(s, p) for s, p in _chain_starts(c) if p >= 2]
    offsets = []
    while len(offsets) < 20:
        block = rng.randrange(0, PREFIX // l2 - 2)
        slot, p = chains[len(offsets) % len(chains)]
        offsets.append((block * l2 + (slot - 1) * l1, p))
    exact = 0
    quantized = True
    for t, p in offsets:
        recs = return_times(c, t, range(l1 + 1, p * l1 + 1))
        exact += all(r.return_time == l2 for r in recs)
        for r in return_times(c, t, [l1, l2]):
            quantized &= r.return_time % r.n == 0
    ok = exact == 20 and quantized
    return ok, f"{exact}/20 offsets with R_n = 625 on [26, p*25]; R_(l_j) = 0 mod l_j: {quantized}"


def criterion_8() -> tuple[bool, str]:
    c = _c25()
    runs1, trail1 = chain_lengths(c, 1)
    runs2, trail2 = chain_lengths(c, 2)
    law = runs1 == chain_law(5) and runs2 == chain_law(10)
    sums = sum(runs1) + trail1 + 5 == 25 and sum(runs2) + trail2 + 10 == 120
    cs = chain_structure(c, 2 * 625 + 4 * 25, 1)
    frac = permuted_block_fraction(c, 1, PREFIX)
    ok = law and sums and (cs.p, cs.q) == (4, 1) and frac == Fraction(5, 25)
    return ok, f"level-1 chains {runs1}, level-2 law holds: {runs2 == chain_law(10)}; permuted fraction {frac}"


def criterion_9() -> tuple[bool, str]:
    details = []
    ok = True
    for params in (P25, ConstructionParams(Variant.MARKER, Fraction(1, 2), 16, 64)):
        c = build(params)
        seq = build_egs(c, 3)
        for j in (2, 3):
            ok &= seq.cardinalities[j - 1] == len(seq.q_sets[j - 2]) * seq.cardinalities[j - 2]
        details.append(f"({params.l1},{params.n1}): {seq.cardinalities}")
        if params.l1 == 16:
            ok &= seq.cardinalities[1] == 64 == seq.closed_forms[1]
    return ok, "; ".join(details)


def criterion_10() -> tuple[bool, str]:
    start = time.perf_counter()
    parts = []
    ok = True
    for tau in (0.3, 0.5, 0.7):
        est = estimate_entropy_dimension(exp_power_profile(tau, 4096))
        ok &= abs(est.upper_estimate - tau) <= 0.05 and abs(est.lower_estimate - tau) <= 0.05
        parts.append(f"{tau}: [{est.lower_estimate:.3f}, {est.upper_estimate:.3f}]")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10
    return ok, ", ".join(parts) + f", {elapsed:.2f}s"


def criterion_11() -> tuple[bool, str]:
    ok = True
    details = []
    for l1, n1 in ((25, 25), (6, 4), (20, 36)):
        c = _fresh(ConstructionParams(Variant.SPACER, Fraction(1, 2), l1, n1, max_level=4))
        expected = l1 * n1 + (c.gen(1).permuted.top - 1)
        ok &= c.length(2) == expected
        details.append(f"l_2({l1},{n1}) = {c.length(2)}")
        # every materialized level: spacers outside lower blocks sit exactly before permuted slots
        for g in c.gens[1:]:
            if not g.materialized:
                continue
            j = g.level
            lower = c.gen(j - 1)
            pset = lower.permuted
            inside = set()
            for s in range(1, lower.word_count + 1):
                b = c.block_start(j, s)
                inside.update(range(b, b + lower.word_length))
            expected_spots = {c.segment_start(j, s) for s in pset}
            for w in g.words:
                outer = {i for i, ch in enumerate(w) if ch == SPACER and i not in inside}
                stray = {i for i in range(len(w)) if i not in inside} - expected_spots
                ok &= outer == expected_spots and not stray
                ok &= all(w[i] == SPACER for i in expected_spots)
    return ok, ", ".join(details) + "; spacer placement verified on all materialized words"


def criterion_12() -> tuple[bool, str]:
    c = _c25()
    rep = rigidity_deficiency(c, c.word(1, 1), (1, 2, 3), PREFIX)
    d = [r.deficiency for r in rep.rows]
    ok = rep.nonincreasing and d[2] < Fraction(1, 20)
    return ok, "deficiencies " + ", ".join(str(x) for x in d)


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 13)}
TITLES = {
    1: "recurrence exactness",
    2: "factor-count oracle equivalence",
    3: "counting bounds",
    4: "marker alignment",
    5: "decomposition round-trip",
    6: "measure equality",
    7: "return-time exactness",
    8: "chain census and permuted mass",
    9: "EGS cardinality",
    10: "dimension estimator calibration",
    11: "spacer bookkeeping",
    12: "rigidity trend",
}


def run(i: int) -> tuple[bool, str]:
    try:
        result = CRITERIA[i]()
    except Exception as exc:  # reported as a failure of that criterion
        result = (False, f"{type(exc).__name__}: {exc}")
    RESULTS[i] = result
    return result


def summary_lines() -> list[str]:
    return [
        f"criterion {i:2d} {'PASS' if RESULTS[i][0] else 'FAIL'} {TITLES[i]}: {RESULTS[i][1]}"
        for i in sorted(RESULTS)
    ]


@pytest.mark.parametrize("i", list(range(1, 13)))
def test_criterion(i):
    ok, detail = run(i)
    print(f"criterion {i} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


if __name__ == "__main__":
    for i in CRITERIA:
        run(i)
        print(summary_lines()[-1], flush=True)
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
