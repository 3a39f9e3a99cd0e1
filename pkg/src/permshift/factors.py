"""Distinct-factor counting per length.

Two independent routes: a generalized suffix automaton (the fast path) and
an exact window scan used as the oracle.  Both treat each input string
separately; windows never straddle two strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import IndexTooLarge, InputTooLarge

ALPHABET = {"0": 0, "1": 1, "b": 2}

BRUTE_FORCE_BUDGET = 2_000_000_000  # total (symbols x lengths) scanned
INDEX_CAP = 20_000_000  # automaton states


@dataclass(frozen=True)
class ComplexityProfile:
    counts: dict[int, int]
    source_level: int | None = None
    stabilized_up_to: int | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def n_max(self) -> int:
        return max(self.counts) if self.counts else 0

    def __getitem__(self, n: int) -> int:
        return self.counts[n]

    def as_list(self) -> list[int]:
        return [self.counts[n] for n in sorted(self.counts)]


def _as_family(words) -> list[str]:
    if isinstance(words, str):
        return [words]
    return list(words)


def _encode(words: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated symbol codes and, per position, the end of its word."""
    total = sum(len(w) for w in words)
    codes = np.empty(total, dtype=np.int64)
    ends = np.empty(total, dtype=np.int64)
    pos = 0
    for w in words:
        if not w:
            continue
        codes[pos:pos + len(w)] = np.frombuffer(w.encode("ascii"), dtype=np.uint8)
        ends[pos:pos + len(w)] = pos + len(w)
        pos += len(w)
    return codes, ends


def count_factors_bruteforce(words, n_max: int, cyclic: bool = False) -> ComplexityProfile:
    """Exact number of distinct length-n windows, n = 1 .. n_max.

    Windows are deduplicated by iterative extension: the class of a length-(n+1)
    window is the pair (class of its length-n prefix, next symbol), relabelled
    through a sort.  No hashing, so the count is exact.  With ``cyclic`` each
    word is read as a circular word (windows wrap around).
    """
    family = _as_family(words)
    if cyclic:
        family = [w + (w * (-(-n_max // len(w))))[: n_max - 1] if w else w for w in family]
        starts_limit = [len(w) for w in _as_family(words)]
    total = sum(len(w) for w in family)
    if total * n_max > BRUTE_FORCE_BUDGET:
        raise InputTooLarge(f"{total} symbols x {n_max} lengths exceeds the brute-force budget")
    codes, ends = _encode(family)
    idx = np.arange(len(codes), dtype=np.int64)
    if cyclic:
        # only windows starting inside the original word are distinct positions
        keep = np.zeros(len(codes), dtype=bool)
        pos = 0
        for w, lim in zip(family, starts_limit):
            keep[pos:pos + lim] = True
            pos += len(w)
        idx = idx[keep]
    counts: dict[int, int] = {}
    if len(idx) == 0:
        return ComplexityProfile({n: 0 for n in range(1, n_max + 1)})
    _, classes = np.unique(codes[idx], return_inverse=True)
    classes = classes.astype(np.int64)
    counts[1] = int(classes.max()) + 1
    for n in range(2, n_max + 1):
        valid = idx + n - 1 < ends[idx]
        idx = idx[valid]
        if len(idx) == 0:
            for m in range(n, n_max + 1):
                counts[m] = 0
            break
        keys = classes[valid] * 4 + codes[idx + n - 1]
        _, classes = np.unique(keys, return_inverse=True)
        classes = classes.astype(np.int64)
        counts[n] = int(classes.max()) + 1
    return ComplexityProfile(counts)


def window_distributions(word: str, n_max: int):
    """Yield (n, counts) where counts are the multiplicities of the distinct
    length-n windows of ``word`` (sliding, exact)."""
    codes, _ = _encode([word])
    if len(codes) == 0:
        return
    _, classes, counts = np.unique(codes, return_inverse=True, return_counts=True)
    classes = classes.astype(np.int64)
    yield 1, counts
    for n in range(2, min(n_max, len(codes)) + 1):
        keys = classes[:-1] * 4 + codes[n - 1:]
        _, classes, counts = np.unique(keys, return_inverse=True, return_counts=True)
        classes = classes.astype(np.int64)
        yield n, counts


def count_factors_naive(words, n_max: int) -> dict[int, int]:
    """Set-of-slices reference for tiny inputs."""
    family = _as_family(words)
    return {n: len({w[i:i + n] for w in family for i in range(len(w) - n + 1)}) for n in range(1, n_max + 1)}


class FactorIndex:
    """Generalized suffix automaton over a word family.

    States are stored column-wise: ``length``, ``link`` and one transition
    column per symbol (-1 when absent).
    """

    def __init__(self, cap: int = INDEX_CAP):
        self.cap = cap
        self.length = [0]
        self.link = [-1]
        self.next = [[-1], [-1], [-1]]

    def _new_state(self, length: int, link: int, src: int | None = None) -> int:
        if len(self.length) >= self.cap:
            raise IndexTooLarge(f"suffix automaton exceeds {self.cap} states")
        self.length.append(length)
        self.link.append(link)
        for col in self.next:
            col.append(col[src] if src is not None else -1)
        return len(self.length) - 1

    def add_word(self, word: str) -> None:
        length, link, nxt = self.length, self.link, self.next
        last = 0
        for ch in word:
            c = ALPHABET[ch]
            col = nxt[c]
            q = col[last]
            if q != -1:
                # transition exists already: reuse or split
                if length[q] == length[last] + 1:
                    last = q
                    continue
                clone = self._new_state(length[last] + 1, link[q], q)
                p = last
                while p != -1 and col[p] == q:
                    col[p] = clone
                    p = link[p]
                link[q] = clone
                last = clone
                continue
            cur = self._new_state(length[last] + 1, 0)
            p = last
            while p != -1 and col[p] == -1:
                col[p] = cur
                p = link[p]
            if p != -1:
                q = col[p]
                if length[p] + 1 == length[q]:
                    link[cur] = q
                else:
                    clone = self._new_state(length[p] + 1, link[q], q)
                    while p != -1 and col[p] == q:
                        col[p] = clone
                        p = link[p]
                    link[q] = clone
                    link[cur] = clone
            last = cur

    @property
    def size(self) -> int:
        return len(self.length)

    def distinct_factor_count(self) -> int:
        return sum(self.length[v] - self.length[self.link[v]] for v in range(1, self.size))

    def counts_by_length(self, n_max: int) -> dict[int, int]:
        diff = np.zeros(n_max + 2, dtype=np.int64)
        length = np.asarray(self.length, dtype=np.int64)[1:]
        link_len = np.asarray(self.length, dtype=np.int64)[np.asarray(self.link[1:], dtype=np.int64)]
        lo = link_len + 1
        hi = np.minimum(length, n_max)
        ok = lo <= hi
        np.add.at(diff, lo[ok], 1)
        np.add.at(diff, hi[ok] + 1, -1)
        acc = np.cumsum(diff)
        return {n: int(acc[n]) for n in range(1, n_max + 1)}

    def contains(self, u: str) -> bool:
        v = 0
        for ch in u:
            v = self.next[ALPHABET[ch]][v]
            if v == -1:
                return False
        return True


def build_factor_index(words: Iterable[str] | str, cap: int = INDEX_CAP) -> FactorIndex:
    index = FactorIndex(cap)
    for w in _as_family(words):
        index.add_word(w)
    return index


def count_factors(index: FactorIndex, n_max: int) -> ComplexityProfile:
    return ComplexityProfile(index.counts_by_length(n_max))
