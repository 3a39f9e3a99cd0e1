"""Tiny-instance oracle suite.

T0 is (marker, α = 1/2, l1 = 6, N1 = 4): levels (6, 4), (24, 2), (48, 1), so
the limit word is periodic with period 48 and every quantity can be checked
against a direct scan.  Checks run in order; the first failure is reported.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .complexity import exp_power_profile, estimate_entropy_dimension, language_profile
from .construction import Construction, ConstructionParams, DegenerateWarning, Variant
from .egs import build_dj, rigidity_deficiency
from .ergodic import chain_structure, decompose, measure_estimate, return_time
from .factors import build_factor_index, count_factors, count_factors_bruteforce

T0 = ConstructionParams(Variant.MARKER, Fraction(1, 2), 6, 4)
T0_SEEDS = ["001010", "001011", "001101", "001110"]
T0_LEVEL2 = ("001010001011001101001110", "001010001110001101001011")
# a seed table whose second word sits astride the others
CORRUPT_SEEDS = ["001010", "010010", "001101", "001110"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _t0(seeds=None) -> Construction:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateWarning)
        return Construction(T0, seeds=seeds)


def _alignment(c: Construction) -> str | None:
    w = c.limit_prefix(480)
    for j in (1, 2):
        lj = c.length(j)
        for idx, u in enumerate(c.gen(j).words, start=1):
            pos = w.find(u)
            while pos != -1:
                if pos % lj:
                    return f"C_{j} word {idx} at offset {pos}"
                pos = w.find(u, pos + 1)
    return None


def _checks(c: Construction, quick: bool) -> list[tuple[str, Callable[[], str | None]]]:
    w = c.limit_prefix(96)

    def seeds():
        return None if list(c.gen(1).words) == T0_SEEDS else f"seed words {c.gen(1).words}"

    def recurrence():
        got = [(g.word_length, g.word_count) for g in c.gens]
        return None if got == [(6, 4), (24, 2), (48, 1)] and c.absorbing else f"levels {got}"

    def level2():
        return None if c.gen(2).words == T0_LEVEL2 else "C_2 words differ"

    def profile():
        ours = language_profile(c, 50).counts
        oracle = count_factors_bruteforce(c.word(3, 1), 50, cyclic=True).counts
        return None if ours == oracle else "language profile differs from the cyclic scan"

    def automaton():
        family = list(c.gen(2).words)
        a = count_factors(build_factor_index(family), 24).counts
        b = count_factors_bruteforce(family, 24).counts
        return None if a == b else "suffix automaton disagrees with the window scan"

    def decomposition():
        d = decompose(c, w[3:30], 1)
        if (d.start_offset, d.blocks, d.valid_phases) != (3, (2, 3, 4, 1), 1):
            return f"got phase {d.start_offset}, blocks {d.blocks}"
        return None if d.reconstruct(c) == w[3:30] else "round trip failed"

    def measure():
        m = measure_estimate(c, T0_SEEDS[0], 480)
        return None if m.frequency == Fraction(20, 475) and m.aligned_only else f"frequency {m.frequency}"

    def returns():
        r = return_time(c, 0, 6)
        return None if r.return_time == 24 else f"R_6 = {r.return_time}"

    def chains():
        cs = chain_structure(c, 13, 1)
        ok = cs.chains == (1, 1) and cs.trailing_run == 0 and (cs.p, cs.q, cs.permuted_flag) == (1, 1, False)
        return None if ok else f"{cs}"

    def dj():
        return None if len(build_dj(c, 2).representatives) == 2 else "|D_2| != 2"

    def rigidity():
        r = rigidity_deficiency(c, T0_SEEDS[0], (2,), 4800)
        return None if r.rows[0].deficiency == 0 else f"deficiency {r.rows[0].deficiency}"

    def calibration():
        est = estimate_entropy_dimension(exp_power_profile(0.5, 4096))
        ok = 0.45 <= est.lower_estimate <= est.upper_estimate <= 0.55
        return None if ok else f"estimate [{est.lower_estimate:.3f}, {est.upper_estimate:.3f}]"

    checks = [
        ("alignment", lambda: _alignment(c)),
        ("seed words", seeds),
        ("recurrence", recurrence),
        ("level-2 words", level2),
        ("decomposition", decomposition),
        ("measure", measure),
        ("return time", returns),
        ("chains", chains),
        ("D_2", dj),
        ("rigidity", rigidity),
        ("factor automaton", automaton),
    ]
    if not quick:
        checks += [("language profile", profile), ("dimension calibration", calibration)]
    return checks


def run_selftest(quick: bool = False, seeds: list[str] | None = None) -> list[CheckResult]:
    """Run the suite; stops at the first failing check."""
    results = []
    try:
        c = _t0(seeds)
    except Exception as exc:  # construction itself is the first check
        return [CheckResult("construction", False, f"{type(exc).__name__}: {exc}", 0.0)]
    for name, fn in _checks(c, quick):
        start = time.perf_counter()
        try:
            problem = fn()
        except Exception as exc:
            problem = f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, problem is None, problem or "ok", time.perf_counter() - start))
        if problem is not None:
            break
    return results
