"""Entropy generating sequences, the ordering they induce, and empirical
spectral / rigidity diagnostics.

Q_{j-1} is the lower half of the permuted slots: {2} ∪ {i^e : 2 <= i <= ⌊top/2⌋}
where P_{j-1} uses i up to ``top``.  It is always a prefix of sorted P_{j-1}.
D_j is a transversal of C_j for the restriction to Q_{j-1}: one word per
injective assignment of permuted values to Q slots, namely the one whose
remaining permuted slots are in increasing order (the lexicographically
smallest extension).
"""

from __future__ import annotations

import bisect
import itertools
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .construction import Construction, PermutedSet
from .errors import InfeasiblePlacement, LevelTooSmall, MaterializationTooLarge, PrefixBeyondMaxLevel
from .intmath import perm_count, rank_permutation

log = logging.getLogger(__name__)

DJ_CAP = 1_000_000
EGS_SET_CAP = 20_000_000


# -- D_j ---------------------------------------------------------------------------


def q_set(pset: PermutedSet) -> PermutedSet:
    """Q for a level whose permuted set is ``pset``."""
    if pset is None or pset.top < 2:
        raise LevelTooSmall("no permuted powers at this level")
    q = PermutedSet(pset.n, pset.exponent, pset.top // 2, pset.include_two)
    if q.size < 1:
        raise LevelTooSmall(f"Q is empty for N={pset.n}")
    return q


@dataclass(frozen=True)
class DjSet:
    level: int
    representatives: tuple[int, ...]
    q_set: tuple[int, ...]
    permuted_count: int

    @property
    def expected_size(self) -> int:
        return perm_count(self.permuted_count, len(self.q_set))


def iter_dj_representatives(c: Construction, j: int) -> Iterator[int]:
    """Canonical indices of D_j in increasing order."""
    if j < 2:
        raise LevelTooSmall("D_j needs a level below it")
    pset = c.gens[j - 2].permuted
    q = q_set(pset)
    m, k = pset.size, q.size
    for head in itertools.permutations(range(m), k):
        used = set(head)
        perm = list(head) + [v for v in range(m) if v not in used]
        yield rank_permutation(perm) + 1


def build_dj(c: Construction, j: int, cap: int = DJ_CAP) -> DjSet:
    pset = c.gen(j - 1).permuted if j >= 2 else None
    if pset is None:
        raise LevelTooSmall(f"level {j} has no level below with permuted slots")
    q = q_set(pset)
    if perm_count(pset.size, q.size) > cap:
        raise MaterializationTooLarge(f"|D_{j}| = P({pset.size}, {q.size}) exceeds {cap}")
    reps = tuple(iter_dj_representatives(c, j))
    return DjSet(j, reps, tuple(q), pset.size)


def q_restriction(c: Construction, j: int, index: int) -> tuple[int, ...]:
    """Level-(j-1) positions of the blocks at the Q slots of word ``index``."""
    q = q_set(c.gen(j - 1).permuted)
    return tuple(c.slot_position(j, index, s) for s in q)


# -- ordering ------------------------------------------------------------------------


class EgsOrder:
    """Arithmetic ordering of a level: position -> canonical index.

    Positions in P_j receive the chosen D_j words in slot order; every other
    position receives the remaining indices in increasing order.  Only the
    |P_j| assigned indices are stored.
    """

    def __init__(self, n: int, pset: PermutedSet, assigned: Sequence[int]):
        self.n = n
        self.pset = pset
        self.assigned = tuple(assigned)
        self._sorted = sorted(self.assigned)
        self._slot_of = {v: pset.element(k) for k, v in enumerate(self.assigned)}

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> int:
        return self.index_of(i + 1)

    def __iter__(self):
        for p in range(1, self.n + 1):
            yield self.index_of(p)

    def index_of(self, position: int) -> int:
        k = self.pset.index(position)
        if k >= 0:
            return self.assigned[k]
        r = position - self.pset.count_below(position + 1)
        # r-th smallest integer outside the assigned set
        x = r
        while True:
            y = r + bisect.bisect_right(self._sorted, x)
            if y == x:
                return x
            x = y

    def position_of(self, index: int) -> int:
        if index in self._slot_of:
            return self._slot_of[index]
        r = index - bisect.bisect_right(self._sorted, index)
        s = r
        while True:
            t = r + self.pset.count_below(s + 1)
            if t == s:
                return s
            s = t


def build_egs_ordering(c: Construction, j: int) -> EgsOrder | None:
    """Ordering of C_j placing D_j words at the permuted slots of u_1^{(j+1)}.

    Works on a construction that is still being built: only levels j-1 and j
    are consulted.
    """
    g = c.gens[j - 1]
    pset = g.permuted
    if pset is None or pset.size == 0:
        return None
    try:
        reps = iter_dj_representatives(c, j)
    except LevelTooSmall:
        log.info("level %d: Q is empty, keeping the canonical order", j)
        return None
    chosen = list(itertools.islice((r for r in reps if r != 1), pset.size))
    if len(chosen) < pset.size:
        raise InfeasiblePlacement(f"level {j}: {pset.size} permuted slots but only {len(chosen)} D-words")
    return EgsOrder(g.word_count, pset, chosen)


# -- S_j ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class EgsSequence:
    sets: tuple[np.ndarray, ...]
    cardinalities: tuple[int, ...]
    closed_forms: tuple[Fraction | None, ...]
    q_sets: tuple[tuple[int, ...], ...]
    upper_dimension_estimate: float
    level_ratios: tuple[float, ...] = field(default_factory=tuple)

    @property
    def sequence(self) -> np.ndarray:
        return self.sets[-1]


def _closed_form(c: Construction, j: int) -> Fraction | None:
    """(l_1 / 2^{j-1}) Π_{i<j} ⌊N_i^α⌋, defined when each factor is even."""
    tops = [c.gen(i).permuted.top for i in range(1, j)]
    if any(t % 2 for t in tops):
        return None
    return Fraction(c.length(1), 2 ** (j - 1)) * math.prod(tops)


def _tail_slope(seq: np.ndarray) -> float:
    """Least-squares slope of log n against log s_n over the second half."""
    n = np.arange(1, len(seq) + 1, dtype=float)
    tail = slice(len(seq) // 2, None)
    x = np.log(seq[tail].astype(float) + 1)
    if len(x) < 2 or np.ptp(x) == 0:
        return float("nan")
    return float(np.polyfit(x, np.log(n[tail]), 1)[0])


def build_egs(c: Construction, levels: int, cap: int = EGS_SET_CAP) -> EgsSequence:
    """S_1 = {0..l_1-1}; S_j = ∪_{k ∈ Q_{j-1}} ((k-1)·l_{j-1} + S_{j-1})."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if levels > c.max_level:
        raise PrefixBeyondMaxLevel(f"S_{levels} needs level {levels}")
    sets = [np.arange(c.length(1), dtype=np.int64)]
    qs: list[tuple[int, ...]] = []
    for j in range(2, levels + 1):
        q = q_set(c.gen(j - 1).permuted)
        if q.size * len(sets[-1]) > cap:
            raise MaterializationTooLarge(f"|S_{j}| exceeds {cap}")
        step = c.length(j - 1)
        prev = sets[-1]
        sets.append(np.concatenate([(k - 1) * step + prev for k in q]))
        qs.append(tuple(q))
    cards = tuple(len(s) for s in sets)
    closed = tuple(_closed_form(c, j) for j in range(1, levels + 1))
    # log n / log s_n at the last element of each S_j, where the limsup in
    # the upper-dimension formula is approached
    ratios = tuple(
        math.log(len(s)) / math.log(int(s[-1]) + 1) if s[-1] > 0 else float("nan") for s in sets
    )
    estimate = _tail_slope(sets[-1])
    return EgsSequence(tuple(sets), cards, closed, tuple(qs), estimate, ratios)


# -- spectral diagnostics ----------------------------------------------------------------


def occurrence_indicator(text: str, u: str, length: int) -> np.ndarray:
    """Boolean array: t < length with text[t:t+|u|] == u.  The empty word is everywhere."""
    ind = np.zeros(length, dtype=bool)
    if not u:
        ind[:] = True
        return ind
    pos = [m.start() for m in re.finditer(f"(?={re.escape(u)})", text)]
    pos = np.asarray(pos, dtype=np.int64)
    ind[pos[pos < length]] = True
    return ind


@dataclass(frozen=True)
class CylinderSpectrum:
    word: str
    length: int
    occurrences: int
    lags: tuple[int, ...]
    co_occurrence: tuple[int, ...]
    block_level: int
    block_lags: tuple[int, ...]
    block_co_occurrence: tuple[int, ...]
    thetas: tuple[float, ...]
    magnitudes: tuple[float, ...]

    @property
    def frequency(self) -> Fraction:
        return Fraction(self.occurrences, self.length)

    @property
    def autocorrelation(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(k, self.length) for k in self.co_occurrence)

    @property
    def empty_intersection_density(self) -> Fraction:
        if not self.block_lags:
            return Fraction(0)
        return Fraction(sum(1 for v in self.block_co_occurrence if v == 0), len(self.block_lags))

    def peaks(self, top: int = 10) -> list[tuple[float, float]]:
        order = np.argsort(-np.asarray(self.magnitudes), kind="stable")[:top]
        return [(self.thetas[i], self.magnitudes[i]) for i in order]


@dataclass(frozen=True)
class SpectralDiagnostics:
    length: int
    cylinders: tuple[CylinderSpectrum, ...]
    undersampled: bool = False


def spectral_scan(
    c: Construction,
    words: Iterable[str],
    length: int = 1_000_000,
    lags: Iterable[int] | None = None,
    block_level: int = 1,
    block_lag_count: int | None = None,
    thetas: Iterable[float] | None = None,
) -> SpectralDiagnostics:
    """Autocorrelations, empty-intersection densities over lags k·l_j, and a
    Fourier scan of the occurrence indicator of each cylinder."""
    lj = c.length(block_level)
    if block_lag_count is None:
        block_lag_count = max(1, length // (100 * lj))
    block_lags = tuple(k * lj for k in range(1, block_lag_count + 1))
    lags = tuple(lags) if lags is not None else tuple(range(0, 4 * lj + 1))
    max_lag = max(lags + block_lags)
    undersampled = length < 100 * max_lag
    thetas = tuple(thetas) if thetas is not None else tuple(i / 1000 for i in range(501))
    words = list(words)
    span = length + max_lag
    text = c.limit_prefix(span + max((len(u) for u in words), default=1))
    out = []
    t_grid = np.asarray(thetas, dtype=float)
    for u in words:
        ind = occurrence_indicator(text, u, span)
        base = ind[:length]
        co = tuple(int(np.count_nonzero(base & ind[k:k + length])) for k in lags)
        bco = tuple(int(np.count_nonzero(base & ind[k:k + length])) for k in block_lags)
        occ = np.flatnonzero(base).astype(float)
        mags = []
        for chunk in np.array_split(t_grid, max(1, len(t_grid) // 64)):
            phase = np.exp(2j * np.pi * np.outer(chunk, occ))
            mags.extend(np.abs(phase.sum(axis=1)) / length)
        out.append(
            CylinderSpectrum(
                u, length, int(base.sum()), lags, co, block_level, block_lags, bco, thetas, tuple(float(m) for m in mags)
            )
        )
    return SpectralDiagnostics(length, tuple(out), undersampled)


# -- rigidity -----------------------------------------------------------------------------


@dataclass(frozen=True)
class RigidityRow:
    level: int
    lag: int
    deficiency: Fraction

    @property
    def numerator(self) -> int:
        return self.deficiency.numerator

    @property
    def denominator(self) -> int:
        return self.deficiency.denominator


@dataclass(frozen=True)
class RigidityReport:
    word: str
    length: int
    frequency: Fraction
    rows: tuple[RigidityRow, ...]
    undersampled: bool = False

    @property
    def nonincreasing(self) -> bool:
        d = [r.deficiency for r in self.rows]
        return all(a >= b for a, b in zip(d, d[1:]))


def rigidity_deficiency(
    c: Construction, u: str, levels: Iterable[int] = (1, 2, 3), length: int = 1_000_000
) -> RigidityReport:
    """Exact fraction of t < length with 1_[u](σ^{t+l_n} w) != 1_[u](σ^t w)."""
    levels = list(levels)
    lags = [c.length(n) for n in levels]
    span = length + max(lags)
    text = c.limit_prefix(span + len(u))
    ind = occurrence_indicator(text, u, span)
    base = ind[:length]
    rows = tuple(
        RigidityRow(n, lag, Fraction(int(np.count_nonzero(base != ind[lag:lag + length])), length))
        for n, lag in zip(levels, lags)
    )
    return RigidityReport(u, length, Fraction(int(base.sum()), length), rows, length < 100 * max(lags))
