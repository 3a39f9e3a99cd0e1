"""Hierarchical permutation word families C_1, C_2, ... and their limit word.

Level j words have length ``l_j``; there are ``N_j`` of them.  Word #1 of
level j+1 is the in-order concatenation of all level-j words, and the other
level-(j+1) words permute the blocks sitting at the permuted slots ``P_j``.
Words are indexed by ``1 + lexicographic rank`` of that permutation, so word
#1 is always the identity.

Only small levels are materialized as strings; every other word is accessed
virtually by descending through the levels.
"""

from __future__ import annotations

import bisect
import logging
import math
import random
import warnings
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

from .errors import (
    AlphaOutOfRange,
    DegeneratePermutedSet,
    InfeasibleSeed,
    MaterializationTooLarge,
    PositionOutOfRange,
    PrefixBeyondMaxLevel,
)
from .intmath import floor_inverse, floor_power, iroot, no_double_zero_count, unrank_no_double_zero, unrank_permutation

log = logging.getLogger(__name__)

SPACER = "b"
MARKER = "001"

# symbols per materialized level
MATERIALIZE_CAP = 2_000_000
# largest permuted-set size whose factorial we are willing to form
PERMUTED_SIZE_CAP = 100_000


class Variant(str, Enum):
    PLAIN = "plain"
    MARKER = "marker"
    SPACER = "spacer"


class Ordering(str, Enum):
    LEX_UNRANK = "lex"
    EGS_ORDERED = "egs"


class Symbol(str, Enum):
    ZERO = "0"
    ONE = "1"
    SPACER = SPACER


class DegenerateWarning(UserWarning):
    """Parameters sit on a fixed point of the count recurrence."""


def parse_alpha(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10_000)
    return Fraction(str(value).strip())


@dataclass(frozen=True)
class ConstructionParams:
    variant: Variant = Variant.MARKER
    alpha: Fraction = Fraction(1, 2)
    l1: int = 25
    n1: int = 25
    ordering: Ordering = Ordering.LEX_UNRANK
    rng_seed: int | None = None
    max_level: int = 3

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "ordering", Ordering(self.ordering))
        object.__setattr__(self, "alpha", parse_alpha(self.alpha))

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "alpha": str(self.alpha),
            "l1": self.l1,
            "n1": self.n1,
            "ordering": self.ordering.value,
            "rng_seed": self.rng_seed,
            "max_level": self.max_level,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConstructionParams":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)

    @property
    def marked(self) -> bool:
        return self.variant is not Variant.PLAIN


def admissible_seed_count(variant: Variant, l1: int) -> int:
    """Number of binary words of length l1 allowed as seed words."""
    if variant is Variant.PLAIN:
        return 2 ** l1
    if l1 < 3:
        return 0
    return no_double_zero_count(l1 - 3)


def validate_params(params: ConstructionParams) -> ConstructionParams:
    if not 0 < params.alpha < 1:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {params.alpha}")
    if params.max_level < 1:
        raise ValueError("max_level must be >= 1")
    if params.n1 < 4:
        raise InfeasibleSeed(f"N1 must be >= 4, got {params.n1}")
    if params.l1 < 1:
        raise InfeasibleSeed("l1 must be positive")
    available = admissible_seed_count(params.variant, params.l1)
    if available < params.n1:
        raise InfeasibleSeed(
            f"only {available} admissible seed words of length {params.l1}, need {params.n1}"
        )
    if floor_power(params.n1, params.alpha) < 2:
        raise DegeneratePermutedSet(f"floor(N1^alpha) < 2 for N1={params.n1}, alpha={params.alpha}")
    return params


def _nth_seed_word(variant: Variant, l1: int, k: int) -> str:
    if variant is Variant.PLAIN:
        return format(k, f"0{l1}b") if l1 else ""
    return MARKER + unrank_no_double_zero(k, l1 - 3)


def seed_words(params: ConstructionParams) -> list[str]:
    """The level-1 words: lexicographically smallest admissible words, or a
    seeded uniform sample of them when ``rng_seed`` is set."""
    validate_params(params)
    total = admissible_seed_count(params.variant, params.l1)
    if params.rng_seed is None:
        ranks = range(params.n1)
    else:
        rng = random.Random(params.rng_seed)
        chosen: set[int] = set()
        while len(chosen) < params.n1:
            chosen.add(rng.randrange(total))
        ranks = sorted(chosen)
    return [_nth_seed_word(params.variant, params.l1, k) for k in ranks]


@dataclass(frozen=True)
class PermutedSet:
    """Sorted set {2} ∪ {i**exponent : 2 <= i <= top}, restricted to [1, n].

    Kept symbolic so that astronomically large levels stay cheap.
    """

    n: int
    exponent: int
    top: int
    include_two: bool = True

    @property
    def has_two(self) -> bool:
        if not self.include_two or self.n < 2:
            return False
        # with exponent 1 the power range already contains 2
        return not (self.exponent == 1 and self.top >= 2)

    @property
    def power_count(self) -> int:
        return max(0, self.top - 1)

    @property
    def size(self) -> int:
        return int(self.has_two) + self.power_count

    def element(self, i: int) -> int:
        """The i-th smallest element (0-based)."""
        if not 0 <= i < self.size:
            raise IndexError(i)
        if self.has_two:
            if i == 0:
                return 2
            i -= 1
        return (i + 2) ** self.exponent

    def index(self, k: int) -> int:
        """Position of element k, or -1."""
        if self.has_two and k == 2:
            return 0
        if k < 4 and not (self.exponent == 1 and k >= 2):
            return -1
        r = iroot(k, self.exponent)
        if r ** self.exponent != k or not 2 <= r <= self.top:
            return -1
        return r - 2 + int(self.has_two)

    def __contains__(self, k: int) -> bool:
        return self.index(k) >= 0

    def count_below(self, s: int) -> int:
        """Number of elements strictly less than s."""
        c = int(self.has_two and s > 2)
        if s > 1:
            c += max(0, min(self.top, iroot(s - 1, self.exponent)) - 1)
        return c

    def __iter__(self) -> Iterator[int]:
        for i in range(self.size):
            yield self.element(i)

    def as_list(self, cap: int = 1_000_000) -> list[int]:
        if self.size > cap:
            raise MaterializationTooLarge(f"permuted set has {self.size} elements")
        return list(self)


def permuted_positions(n: int, alpha: Fraction, variant: Variant = Variant.MARKER) -> PermutedSet:
    """P_j for a level with n words.

    Plain/Marker: {2} ∪ {i^⌊1/α⌋ : 2 <= i <= ⌊n^α⌋}; Spacer drops the 2.
    """
    alpha = parse_alpha(alpha)
    pset = PermutedSet(
        n=n,
        exponent=floor_inverse(alpha),
        top=floor_power(n, alpha),
        include_two=Variant(variant) is not Variant.SPACER,
    )
    if pset.size < 1 and n > 1:
        raise DegeneratePermutedSet(f"empty permuted set for N={n}")
    return pset


@dataclass(frozen=True)
class WordRef:
    level: int
    index: int


@dataclass(frozen=True)
class Generation:
    level: int
    word_length: int
    word_count: int
    permuted: PermutedSet | None
    spacer_count: int = 0
    words: tuple[str, ...] | None = None
    # position -> canonical index (an EgsOrder); None means the identity
    order: object | None = None

    @property
    def materialized(self) -> bool:
        return self.words is not None

    @property
    def permuted_set(self) -> list[int]:
        return [] if self.permuted is None else self.permuted.as_list()

    def manifest(self, variant: Variant, ordering: Ordering) -> dict:
        if self.permuted is None:
            pset = []
        elif self.permuted.size <= 10_000:
            pset = self.permuted.as_list()
        else:
            pset = {
                "size": str(self.permuted.size),
                "exponent": self.permuted.exponent,
                "top": str(self.permuted.top),
                "include_two": self.permuted.has_two,
            }
        return {
            "level": self.level,
            "word_length": str(self.word_length),
            "word_count": str(self.word_count),
            "permuted_set": pset,
            "spacer_count": self.spacer_count,
            "variant": variant.value,
            "ordering": ordering.value,
            "materialized": self.materialized,
        }


class Construction:
    """All generations up to ``params.max_level`` plus symbol access.

    Immutable after ``__init__``; reads are safe from several threads.
    """

    def __init__(
        self,
        params: ConstructionParams,
        materialize_cap: int = MATERIALIZE_CAP,
        seeds: list[str] | None = None,
    ):
        self.params = validate_params(params)
        self.materialize_cap = materialize_cap
        # an explicit seed table replaces the generated one (used for fault injection)
        self._seeds = None if seeds is None else tuple(seeds)
        self.absorbing = False
        self.gens: list[Generation] = []
        self._perm = lru_cache(maxsize=8192)(self._perm_uncached)
        self._build()

    # -- construction -------------------------------------------------

    def _permuted_for(self, n: int) -> PermutedSet | None:
        if n <= 1:
            return None
        return PermutedSet(
            n=n,
            exponent=floor_inverse(self.params.alpha),
            top=floor_power(n, self.params.alpha),
            include_two=self.params.variant is not Variant.SPACER,
        )

    def _build(self) -> None:
        p = self.params
        seeds = self._seeds if self._seeds is not None else tuple(seed_words(p))
        if len(seeds) != p.n1 or any(len(w) != p.l1 for w in seeds):
            raise InfeasibleSeed(f"seed table must hold {p.n1} words of length {p.l1}")
        self.gens.append(Generation(1, p.l1, p.n1, self._permuted_for(p.n1), 0, seeds))
        if p.n1 == 24 or (p.alpha == Fraction(1, 2) and p.n1 <= 2):
            warnings.warn("N=24 is a fixed point of N -> (floor sqrt N)!", DegenerateWarning)
        while len(self.gens) < p.max_level:
            g = self.gens[-1]
            if g.permuted is not None and g.permuted.size == 0:
                raise DegeneratePermutedSet(f"level {g.level}: empty permuted set for N={g.word_count}")
            if g.permuted is None:
                # a single word repeats forever; the limit word is periodic
                self.absorbing = True
                warnings.warn(
                    f"level {g.level} has N={g.word_count}; hierarchy is absorbing", DegenerateWarning
                )
                break
            self._maybe_order(len(self.gens))
            self.gens.append(self.next_generation(self.gens[-1]))
        if self.gens[-1].word_count == 1:
            self.absorbing = True

    def _maybe_order(self, j: int) -> None:
        """Attach the EGS ordering to level j if requested."""
        if self.params.ordering is not Ordering.EGS_ORDERED or j < 2:
            return
        from .egs import build_egs_ordering

        g = self.gens[j - 1]
        order = build_egs_ordering(self, j)
        self.gens[j - 1] = Generation(
            g.level, g.word_length, g.word_count, g.permuted, g.spacer_count, g.words, order
        )

    def next_generation(self, gen: Generation) -> Generation:
        pset = gen.permuted
        if pset is None or pset.size == 0:
            raise DegeneratePermutedSet(f"level {gen.level} has no permuted slots")
        if pset.size > PERMUTED_SIZE_CAP:
            raise MaterializationTooLarge(
                f"level {gen.level + 1}: word count ({pset.size})! is beyond the arithmetic cap"
            )
        count = math.factorial(pset.size)
        spacers = pset.size if self.params.variant is Variant.SPACER else 0
        length = gen.word_length * gen.word_count + spacers
        level = gen.level + 1
        words = None
        if count * length <= self.materialize_cap and gen.materialized:
            words = self._materialize(gen, level, count, length)
        return Generation(level, length, count, self._permuted_for(count), spacers, words)

    def _materialize(self, gen: Generation, level: int, count: int, length: int) -> tuple[str, ...]:
        pset = gen.permuted
        slots = pset.as_list()
        blocks = [gen.words[self._position_to_index(gen, s) - 1] for s in range(1, gen.word_count + 1)]
        spacer = self.params.variant is Variant.SPACER
        out = []
        for rank in range(count):
            perm = unrank_permutation(rank, len(slots))
            seq = list(blocks)
            for i, s in enumerate(slots):
                seq[s - 1] = blocks[slots[perm[i]] - 1]
            if spacer:
                for s in reversed(slots):
                    seq[s - 1] = SPACER + seq[s - 1]
            word = "".join(seq)
            assert len(word) == length
            out.append(word)
        return tuple(out)

    # -- arithmetic helpers --------------------------------------------

    @property
    def max_level(self) -> int:
        return len(self.gens)

    def gen(self, j: int) -> Generation:
        if not 1 <= j <= len(self.gens):
            raise PrefixBeyondMaxLevel(f"level {j} not built (max {len(self.gens)})")
        return self.gens[j - 1]

    def length(self, j: int) -> int:
        return self.gen(j).word_length

    def count(self, j: int) -> int:
        return self.gen(j).word_count

    def _position_to_index(self, gen: Generation, position: int) -> int:
        if gen.order is None:
            return position
        return gen.order.index_of(position)

    def index_to_position(self, j: int, index: int) -> int:
        """Inverse of the level-j ordering."""
        gen = self.gen(j)
        if gen.order is None:
            return index
        return gen.order.position_of(index)

    def _perm_uncached(self, j: int, index: int) -> tuple[int, ...]:
        pset = self.gen(j - 1).permuted
        return tuple(unrank_permutation(index - 1, pset.size))

    def segment_start(self, j: int, s: int) -> int:
        """Offset in a level-j word of slot s (including its spacer, if any)."""
        lower = self.gen(j - 1)
        start = (s - 1) * lower.word_length
        if self.params.variant is Variant.SPACER:
            start += lower.permuted.count_below(s)
        return start

    def block_start(self, j: int, s: int) -> int:
        """Offset in a level-j word where the symbols of slot s's block begin."""
        start = self.segment_start(j, s)
        if self.params.variant is Variant.SPACER and s in self.gen(j - 1).permuted:
            start += 1
        return start

    def slot_at(self, j: int, pos: int) -> int:
        """1-based slot of the level-(j-1) block (or its spacer) covering ``pos``."""
        lower = self.gen(j - 1)
        if self.params.variant is not Variant.SPACER:
            return pos // lower.word_length + 1
        lo, hi = 1, lower.word_count
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.segment_start(j, mid) <= pos:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def slot_position(self, j: int, index: int, s: int) -> int:
        """Position (in the ordered listing of level j-1) of the block at slot s of word ``index``."""
        pset = self.gen(j - 1).permuted
        k = pset.index(s)
        if k < 0 or index == 1:
            return s
        return pset.element(self._perm(j, index)[k])

    def slot_value(self, j: int, index: int, s: int) -> int:
        """Canonical level-(j-1) index of the block at slot s of level-j word ``index``."""
        return self._position_to_index(self.gen(j - 1), self.slot_position(j, index, s))

    def block_indices(self, j: int, index: int) -> list[int]:
        return [self.slot_value(j, index, s) for s in range(1, self.count(j - 1) + 1)]

    # -- symbol access --------------------------------------------------

    def word(self, j: int, index: int) -> str:
        g = self.gen(j)
        if g.words is not None:
            return g.words[index - 1]
        if g.word_length > 50 * self.materialize_cap:
            raise MaterializationTooLarge(f"level {j} words have {g.word_length} symbols")
        return self.word_slice(j, index, 0, g.word_length)

    def word_slice(self, j: int, index: int, start: int, stop: int) -> str:
        g = self.gen(j)
        if not 1 <= index <= g.word_count:
            raise PositionOutOfRange(f"word index {index} outside [1, {g.word_count}]")
        start = max(0, start)
        stop = min(stop, g.word_length)
        if start >= stop:
            return ""
        if g.words is not None:
            return g.words[index - 1][start:stop]
        lower_len = self.length(j - 1)
        pieces = []
        pos = start
        while pos < stop:
            s = self.slot_at(j, pos)
            content = self.block_start(j, s)
            if pos < content:
                pieces.append(SPACER)
                pos += 1
                continue
            end = min(stop, content + lower_len)
            v = self.slot_value(j, index, s)
            pieces.append(self.word_slice(j - 1, v, pos - content, end - content))
            pos = end
        return "".join(pieces)

    def word_symbol(self, word: WordRef, position: int) -> Symbol:
        j, index = word.level, word.index
        g = self.gen(j)
        if not 0 <= position < g.word_length:
            raise PositionOutOfRange(f"position {position} outside [0, {g.word_length})")
        if not 1 <= index <= g.word_count:
            raise PositionOutOfRange(f"word index {index} outside [1, {g.word_count}]")
        while g.words is None:
            s = self.slot_at(j, position)
            content = self.block_start(j, s)
            if position < content:
                return Symbol.SPACER
            index = self.slot_value(j, index, s)
            position -= content
            j -= 1
            g = self.gen(j)
        return Symbol(g.words[index - 1][position])

    def limit_prefix(self, length: int) -> str:
        """w[0, length): prefix of the limit word."""
        if length <= 0:
            return ""
        top = self.gens[-1]
        if length <= top.word_length:
            j = next(g.level for g in self.gens if g.word_length >= length)
            return self.word_slice(j, 1, 0, length)
        return self.prefix_slice(0, length)

    def prefix_slice(self, start: int, stop: int) -> str:
        """w[start, stop) without building the prefix before ``start``."""
        top = self.gens[-1]
        if stop <= top.word_length:
            return self.word_slice(top.level, 1, start, stop)
        if not self.absorbing:
            raise PrefixBeyondMaxLevel(f"w[{start}, {stop}) exceeds l_{top.level} = {top.word_length}")
        period = top.word_length
        pieces = []
        pos = start
        while pos < stop:
            a = pos % period
            b = min(period, a + (stop - pos))
            pieces.append(self.word_slice(top.level, 1, a, b))
            pos += b - a
        return "".join(pieces)

    def iter_prefix(self, length: int, chunk: int = 1 << 16) -> Iterator[str]:
        """Stream w[0, length) in chunks of at most ``chunk`` symbols."""
        for pos in range(0, length, chunk):
            yield self.prefix_slice(pos, min(length, pos + chunk))

    # -- location of an offset of w in the hierarchy ----------------------

    def locate(self, t: int, top: int | None = None) -> list[tuple[int, int, int]]:
        """For offset t of w, the containing block at every level.

        Returns ``[(j, slot, index), ...]`` for j = 1 .. top-1 where ``slot`` is the
        1-based slot of the level-j block inside its level-(j+1) parent and
        ``index`` its canonical level-j index.  Spacer positions get slot 0.
        """
        top = top or self.max_level
        top_len = self.length(top)
        if t >= top_len:
            if not self.absorbing:
                raise PrefixBeyondMaxLevel(f"offset {t} beyond l_{top}")
            t %= top_len
        out = []
        j, index, pos = top, 1, t
        while j > 1:
            s = self.slot_at(j, pos)
            content = self.block_start(j, s)
            if pos < content:
                out.append((j - 1, 0, 0))
                break
            v = self.slot_value(j, index, s)
            out.append((j - 1, s, v))
            pos -= content
            index, j = v, j - 1
        out.reverse()
        return out

    def manifest(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "absorbing": self.absorbing,
            "levels": [g.manifest(self.params.variant, self.params.ordering) for g in self.gens],
        }


def seed_generation(params: ConstructionParams) -> Generation:
    validate_params(params)
    words = tuple(seed_words(params))
    pset = permuted_positions(params.n1, params.alpha, params.variant)
    return Generation(1, params.l1, params.n1, pset, 0, words)


@lru_cache(maxsize=32)
def build(params: ConstructionParams) -> Construction:
    """Cached construction; params are hashable and the result is immutable."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateWarning)
        return Construction(params)


def find_level_of_length(c: Construction, n: int) -> int | None:
    lengths = [g.word_length for g in c.gens]
    i = bisect.bisect_left(lengths, n)
    return i + 1 if i < len(lengths) and lengths[i] == n else None
