"""Block decomposition of windows, cylinder frequencies, return times, chain
structure and atom-size / block-entropy profiles.

Points of the subshift are represented as shifts σ^t(w) of the limit word;
frequencies are exact counts over a prefix w[0, L).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .complexity import adjacent_triples
from .construction import MARKER, SPACER, Construction, Variant, WordRef, find_level_of_length
from .errors import (
    BudgetExceeded,
    InsufficientData,
    MaterializationTooLarge,
    NotInLanguage,
    PrefixBeyondMaxLevel,
    TupleBudgetExceeded,
    VariantUnsupported,
    WindowTooShort,
)
from .factors import window_distributions
from .intmath import rank_permutation

LOW_CONFIDENCE = 20
DEFAULT_RETURN_BUDGET = 1_000_000


# -- identifying blocks ---------------------------------------------------------------


@lru_cache(maxsize=64)
def _lookup(c: Construction, j: int) -> dict[str, int]:
    return {w: i for i, w in enumerate(c.gen(j).words, start=1)}


def word_index(c: Construction, j: int, s: str) -> int | None:
    """Canonical index of ``s`` in C_j, or None when s is not a level-j word."""
    g = c.gen(j)
    if len(s) != g.word_length:
        return None
    if g.words is not None:
        return _lookup(c, j).get(s)
    lower = c.gen(j - 1)
    pset = lower.permuted
    spacer = c.params.variant is Variant.SPACER
    perm = []
    for t in range(1, lower.word_count + 1):
        start = c.block_start(j, t)
        if spacer and t in pset and s[start - 1] != SPACER:
            return None
        v = word_index(c, j - 1, s[start:start + lower.word_length])
        if v is None:
            return None
        pos = c.index_to_position(j - 1, v)
        k = pset.index(t)
        if k < 0:
            if pos != t:
                return None
        else:
            r = pset.index(pos)
            if r < 0:
                return None
            perm.append(r)
    if len(set(perm)) != len(perm):
        return None
    return rank_permutation(perm) + 1


def _is_word_suffix(c: Construction, j: int, r: str) -> bool:
    if not r:
        return True
    g = c.gen(j)
    if g.words is not None:
        return any(w.endswith(r) for w in g.words)
    if j > 1 and len(r) >= 2 * c.length(j - 1):
        try:
            decompose(c, r, j - 1, check_adjacency=False)
        except NotInLanguage:
            return False
    return True


def _is_word_prefix(c: Construction, j: int, r: str) -> bool:
    if not r:
        return True
    g = c.gen(j)
    if g.words is not None:
        return any(w.startswith(r) for w in g.words)
    if j > 1 and len(r) >= 2 * c.length(j - 1):
        try:
            decompose(c, r, j - 1, check_adjacency=False)
        except NotInLanguage:
            return False
    return True


@lru_cache(maxsize=16)
def _triples_or_none(c: Construction, j: int):
    try:
        return frozenset(adjacent_triples(c, j))
    except (TupleBudgetExceeded, PrefixBeyondMaxLevel, MaterializationTooLarge):
        return None


# -- decomposition ----------------------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    level: int
    start_offset: int
    blocks: tuple[int, ...]
    gaps: tuple[str, ...]  # spacer run in front of each block
    prefix_residue: str
    suffix_residue: str
    valid_phases: int = 1
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def residues(self) -> tuple[int, int]:
        return len(self.prefix_residue), len(self.suffix_residue)

    @property
    def refs(self) -> list[WordRef]:
        return [WordRef(self.level, b) for b in self.blocks]

    def reconstruct(self, c: Construction) -> str:
        body = "".join(g + c.word(self.level, b) for g, b in zip(self.gaps, self.blocks))
        return self.prefix_residue + body + self.suffix_residue


def _parse_at(c: Construction, window: str, j: int, p: int, check_adjacency: bool) -> Decomposition | None:
    length = c.length(j)
    spacer = c.params.variant is Variant.SPACER
    prefix = window[:p]
    if not _is_word_suffix(c, j, prefix.rstrip(SPACER)):
        return None
    blocks, gaps = [], []
    pos = p
    while True:
        g = 0
        while spacer and pos + g < len(window) and window[pos + g] == SPACER:
            g += 1
        if pos + g + length > len(window):
            break
        idx = word_index(c, j, window[pos + g:pos + g + length])
        if idx is None:
            return None
        blocks.append(idx)
        gaps.append(SPACER * g)
        pos += g + length
    if not blocks:
        return None
    suffix = window[pos:]
    if not _is_word_prefix(c, j, suffix.lstrip(SPACER)):
        return None
    notes = []
    if check_adjacency and len(blocks) > 1:
        triples = _triples_or_none(c, j)
        if triples is None:
            notes.append(f"adjacency at level {j} not checked")
        else:
            for a, gap, b in zip(blocks, gaps[1:], blocks[1:]):
                if (a, gap, b) not in triples:
                    return None
    return Decomposition(j, p, tuple(blocks), tuple(gaps), prefix, suffix, 1, tuple(notes))


def decompose(c: Construction, window: str, j: int, check_adjacency: bool = True) -> Decomposition:
    """Split ``window`` into full level-j blocks plus partial residues.

    Candidate phases are the positions where every level-j word must begin:
    the marker for j = 1, u_1^{(j-1)} above.  A phase is valid when every
    full block is a C_j word, consecutive blocks are realized neighbours and
    the residues extend to C_j words.
    """
    if c.params.variant is Variant.PLAIN:
        raise VariantUnsupported("decomposition needs the marker or spacer variant")
    length = c.length(j)
    if len(window) < 2 * length:
        raise WindowTooShort(f"window of {len(window)} symbols, need >= {2 * length}")
    head = MARKER if j == 1 else c.word(j - 1, 1)
    # the first full block starts before l_j (one spacer may push it to l_j)
    reach = min(len(window), length + (1 if c.params.variant is Variant.SPACER else 0))
    found = []
    p = window.find(head, 0, reach + len(head))
    while p != -1 and p < reach:
        d = _parse_at(c, window, j, p, check_adjacency)
        if d is not None:
            found.append(d)
        p = window.find(head, p + 1, reach + len(head))
    if not found:
        raise NotInLanguage(f"no consistent level-{j} phase")
    d = found[0]
    return Decomposition(d.level, d.start_offset, d.blocks, d.gaps, d.prefix_residue, d.suffix_residue, len(found), d.notes)


# -- cylinder frequencies ---------------------------------------------------------------


def occurrences(text: str, u: str) -> np.ndarray:
    """All (overlapping) start offsets of u in text."""
    if not u:
        return np.arange(len(text) + 1, dtype=np.int64)
    return np.fromiter((m.start() for m in re.finditer(f"(?={re.escape(u)})", text)), dtype=np.int64)


@dataclass(frozen=True)
class CylinderStats:
    word: str
    prefix_length: int
    occurrence_count: int
    frequency: Fraction
    aligned_only: bool | None
    level: int | None = None
    index: int | None = None

    @property
    def aligned_frequency(self) -> Fraction:
        """Occurrences per symbol of the prefix (count / L)."""
        return Fraction(self.occurrence_count, self.prefix_length)

    @property
    def low_confidence(self) -> bool:
        return self.occurrence_count < LOW_CONFIDENCE

    @property
    def below_floor(self) -> bool:
        """|u| exceeds 1% of L: the estimate is reported but not trustworthy."""
        return 100 * len(self.word) > self.prefix_length


def measure_estimate(c: Construction, u: str, length: int, text: str | None = None) -> CylinderStats:
    """Exact count of u in w[0, length) and its sliding-window frequency."""
    if text is None:
        text = c.limit_prefix(length)
    else:
        text = text[:length]
    offs = occurrences(text, u)
    count = len(offs)
    freq = Fraction(count, length - len(u) + 1)
    aligned = None
    j = find_level_of_length(c, len(u))
    idx = word_index(c, j, u) if j is not None else None
    if idx is not None and c.params.variant is not Variant.SPACER:
        aligned = bool(np.all(offs % c.length(j) == 0))
    return CylinderStats(u, length, count, freq, aligned, j if idx is not None else None, idx)


def _chain_slots(c: Construction, refs: Sequence[WordRef]) -> list[int]:
    j = refs[0].level
    if any(r.level != j for r in refs):
        raise ValueError("a chain lives on a single level")
    pset = c.gen(j).permuted
    slots = [c.index_to_position(j, r.index) for r in refs]
    if len(refs) > 1:
        if any(s in pset for s in slots):
            raise ValueError("a chain contains only unpermuted blocks")
        if any(b != a + 1 for a, b in zip(slots, slots[1:])):
            raise ValueError("chain blocks must occupy consecutive slots")
    return slots


def exact_aligned_measure(c: Construction, ref: WordRef | Sequence[WordRef]) -> Fraction:
    """Measure of a C_j word, or of an unpermuted chain in one C_{j+1} word.

    Each occurs exactly once, aligned, in every level-(j+1) block, so the
    measure is 1 / l_{j+1}.
    """
    if c.params.variant is not Variant.MARKER:
        raise VariantUnsupported(f"{c.params.variant.value} variant has no alignment guarantee")
    refs = [ref] if isinstance(ref, WordRef) else list(ref)
    if not refs:
        raise ValueError("empty chain")
    j = refs[0].level
    if j + 1 > c.max_level:
        raise PrefixBeyondMaxLevel(f"need level {j + 1}")
    _chain_slots(c, refs)
    return Fraction(1, c.length(j + 1))


def chain_word(c: Construction, refs: Sequence[WordRef]) -> str:
    return "".join(c.word(r.level, r.index) for r in refs)


# -- return times -------------------------------------------------------------------------


@dataclass(frozen=True)
class ReturnTimeRecord:
    offset: int
    n: int
    return_time: int
    residues: tuple[tuple[int, int], ...]  # (l_j, R mod l_j)

    def residue(self, modulus: int) -> int:
        return self.return_time % modulus


def _residues(c: Construction, r: int) -> tuple[tuple[int, int], ...]:
    return tuple((c.length(j), r % c.length(j)) for j in range(1, min(2, c.max_level) + 1))


def return_times(
    c: Construction, t: int, ns: Iterable[int], budget: int = DEFAULT_RETURN_BUDGET
) -> list[ReturnTimeRecord]:
    """R_n(σ^t w) for several n, from one forward scan of w."""
    ns = sorted(set(ns))
    if not ns or ns[0] < 1:
        raise ValueError("n must be >= 1")
    text = c.prefix_slice(t, t + ns[-1] + budget)
    out = []
    for n in ns:
        k = text.find(text[:n], 1, budget + n)
        if k == -1:
            raise BudgetExceeded(f"R_{n} at offset {t} exceeds {budget}", lower_bound=budget)
        out.append(ReturnTimeRecord(t, n, k, _residues(c, k)))
    return out


def return_time(c: Construction, t: int, n: int, budget: int = DEFAULT_RETURN_BUDGET) -> ReturnTimeRecord:
    return return_times(c, t, [n], budget)[0]


# -- chains and X-hat ---------------------------------------------------------------------


def chain_lengths(c: Construction, j: int, cap: int = 1_000_000) -> tuple[tuple[int, ...], int]:
    """Maximal runs of unpermuted slots before each permuted slot, plus the
    length of the run after the last permuted slot."""
    g = c.gen(j)
    pset = g.permuted
    if pset is None:
        return (), g.word_count
    runs = []
    prev = 0
    for s in pset.as_list(cap):
        if s - prev - 1 > 0:
            runs.append(s - prev - 1)
        prev = s
    return tuple(runs), g.word_count - prev


def chain_law(top: int) -> tuple[int, ...]:
    """(1, 1, 4, 6, ..., 2(top-1)) for square permuted slots."""
    if top < 2:
        return (1,) if top == 1 else ()
    return (1, 1) + tuple(2 * i for i in range(2, top))


@dataclass(frozen=True)
class ChainStructure:
    level: int
    chains: tuple[int, ...]
    trailing_run: int
    permuted_count: int
    slot: int
    permuted_flag: bool
    p: int
    q: int

    @property
    def total(self) -> int:
        return sum(self.chains) + self.trailing_run + self.permuted_count


def chain_structure(c: Construction, t: int, j: int, with_census: bool = True) -> ChainStructure:
    """Chain data for the level-j block containing offset t of w."""
    if j + 1 > c.max_level:
        raise PrefixBeyondMaxLevel(f"chains at level {j} need level {j + 1}")
    entry = next((e for e in c.locate(t) if e[0] == j), None)
    if entry is None:
        raise NotInLanguage(f"offset {t} lies on a spacer above level {j}")
    _, slot, _ = entry
    if slot == 0:
        raise NotInLanguage(f"offset {t} lies on a spacer at level {j}")
    g = c.gen(j)
    pset = g.permuted
    chains, trailing = chain_lengths(c, j) if with_census else ((), 0)
    if slot in pset:
        return ChainStructure(j, chains, trailing, pset.size, slot, True, 0, 0)
    k = pset.count_below(slot)
    prev = pset.element(k - 1) if k > 0 else 0
    nxt = pset.element(k) if k < pset.size else g.word_count + 1
    return ChainStructure(j, chains, trailing, pset.size, slot, False, nxt - prev - 1, slot - prev)


@dataclass(frozen=True)
class XhatCriteria:
    eta: Fraction = Fraction(3, 8)
    j0: int = 1
    J: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "eta", Fraction(self.eta))
        if not Fraction(1, 4) < self.eta < Fraction(1, 2):
            raise ValueError(f"eta must lie in (1/4, 1/2), got {self.eta}")


def _tj_holds(cs: ChainStructure, n: int, eta: Fraction) -> bool:
    if cs.permuted_flag:
        return False
    # p > N^eta and p - q > N^(1/4), decided in integers
    if cs.p ** eta.denominator <= n ** eta.numerator:
        return False
    gap = cs.p - cs.q
    return gap > 0 and gap ** 4 > n


def xhat_levels(c: Construction, t: int, criteria: XhatCriteria = XhatCriteria()) -> list[tuple[int, bool]]:
    top = criteria.J if criteria.J is not None else c.max_level - 1
    out = []
    for j in range(criteria.j0, top + 1):
        try:
            cs = chain_structure(c, t, j, with_census=False)
        except NotInLanguage:
            out.append((j, False))
            continue
        out.append((j, _tj_holds(cs, c.count(j), criteria.eta)))
    return out


def xhat_member(c: Construction, t: int, criteria: XhatCriteria = XhatCriteria()) -> bool:
    return all(ok for _, ok in xhat_levels(c, t, criteria))


def permuted_block_fraction(c: Construction, j: int, length: int) -> Fraction:
    """Fraction of the aligned level-j blocks of w[0, length) sitting at permuted slots."""
    if c.params.variant is Variant.SPACER:
        raise VariantUnsupported("blocks are not equally spaced in the spacer variant")
    lj = c.length(j)
    pset = c.gen(j).permuted
    blocks = length // lj
    if blocks == 0:
        raise InsufficientData(f"prefix shorter than l_{j}")
    hits = 0
    for m in range(blocks):
        slot = next(s for lev, s, _ in c.locate(m * lj) if lev == j)
        hits += slot in pset
    return Fraction(hits, blocks)


# -- atom sizes and block entropy ------------------------------------------------------------


@dataclass(frozen=True)
class AtomRow:
    offset: int
    n: int
    count: int
    mu: Fraction
    values: tuple[tuple[float, float], ...]  # (beta, -log mu / n^beta)

    @property
    def low_confidence(self) -> bool:
        return self.count < LOW_CONFIDENCE


def atom_size_profile(
    c: Construction,
    offsets: Iterable[int],
    ns: Iterable[int],
    betas: Iterable[float],
    length: int,
) -> list[AtomRow]:
    """-log μ̂(P_n(σ^t w)) / n^β with μ̂ the sliding frequency in w[0, length)."""
    offsets, ns, betas = list(offsets), sorted(set(ns)), list(betas)
    text = c.limit_prefix(length)
    rows = []
    for t in offsets:
        atoms = c.prefix_slice(t, t + ns[-1])
        for n in ns:
            count = len(occurrences(text, atoms[:n]))
            mu = Fraction(count, length - n + 1)
            logmu = -math.log(mu) if count else math.inf
            rows.append(AtomRow(t, n, count, mu, tuple((b, logmu / n ** b) for b in betas)))
    return rows


def empirical_block_entropy(c: Construction, n_max: int, length: int) -> list[tuple[int, float]]:
    """H_n (natural log) of the empirical n-block distribution of w[0, length)."""
    text = c.limit_prefix(length)
    out = []
    for n, counts in window_distributions(text, n_max):
        p = counts / counts.sum()
        out.append((n, float(-(p * np.log(p)).sum())))
    return out
