"""Language profile |B_n(X)|, counting-bound checks and entropy-dimension estimates."""

from __future__ import annotations

import decimal
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .construction import SPACER, Construction, Variant
from .errors import (
    BoundViolated,
    InsufficientData,
    LemmaBoundViolated,
    MaterializationTooLarge,
    PrefixBeyondMaxLevel,
    TupleBudgetExceeded,
)
from .factors import ComplexityProfile, build_factor_index, count_factors
from .intmath import floor_power, perm_count

ADJACENCY_CAP = 2_000_000
FOLLOWER_SCAN_CAP = 100_000


# -- block adjacency ----------------------------------------------------------


def _slot_values(c: Construction, j: int, t: int) -> list[int]:
    """Positions (in level-j ordering) that can occupy slot t of a level-(j+1) word."""
    pset = c.gen(j).permuted
    if pset is not None and t in pset:
        return pset.as_list(ADJACENCY_CAP)
    return [t]


def _spacer_followers(c: Construction, m: int) -> tuple[set[int], set[int], bool]:
    """Level-m positions followed by a spacer / by nothing, as seen in built levels.

    Returns (followed_by_gap, followed_by_nothing, truncated).
    """
    g = c.gen(m)
    pset = g.permuted
    n = g.word_count
    if pset is None:
        return set(), {1}, False
    plist = pset.as_list(ADJACENCY_CAP)
    gap = {s - 1 for s in plist}
    nogap: set[int] = set()
    for t in range(1, n):
        if t + 1 not in pset:
            nogap.update(_slot_values(c, m, t))
    if m + 1 > c.max_level:
        return gap, nogap, True
    up_gap, up_nogap, truncated = _spacer_followers(c, m + 1)
    for followers, target in ((up_gap, gap), (up_nogap, nogap)):
        for v in itertools.islice(followers, FOLLOWER_SCAN_CAP):
            target.add(c.slot_position(m + 1, v, n))
    return gap, nogap, truncated


def adjacent_triples(c: Construction, j: int) -> set[tuple[int, str, int]]:
    """All (a, gap, b): level-j word a, optional spacer, then level-j word b,
    occurring consecutively in the subshift.  Indices are canonical."""
    g = c.gen(j)
    n = g.word_count
    pset = g.permuted
    spacer = c.params.variant is Variant.SPACER
    to_idx = lambda p: c._position_to_index(g, p)  # noqa: E731
    pos_triples: set[tuple[int, str, int]] = set()
    if pset is None:
        # absorbing top: the single word repeats
        return {(1, "", 1)}
    budget = 0
    for t in range(1, n):
        left, right = _slot_values(c, j, t), _slot_values(c, j, t + 1)
        gap = SPACER if spacer and (t + 1) in pset else ""
        budget += len(left) * len(right)
        if budget > ADJACENCY_CAP:
            raise TupleBudgetExceeded(f"level {j} adjacency exceeds {ADJACENCY_CAP} pairs")
        both = t in pset and (t + 1) in pset
        for a in left:
            for b in right:
                if not (both and a == b):
                    pos_triples.add((a, gap, b))
    # junctions between consecutive level-(j+1) words
    last = _slot_values(c, j, n)
    if not spacer:
        pos_triples.update((a, "", 1) for a in last)
    else:
        if j + 1 > c.max_level:
            raise PrefixBeyondMaxLevel(f"spacer junctions at level {j} need level {j + 1}")
        gap_w, nogap_w, _ = _spacer_followers(c, j + 1)
        for gap, followers in ((SPACER, gap_w), ("", nogap_w)):
            seen = set()
            for v in itertools.islice(followers, FOLLOWER_SCAN_CAP):
                seen.add(c.slot_position(j + 1, v, n))
                if len(seen) == len(last):
                    break
            pos_triples.update((a, gap, 1) for a in seen)
    return {(to_idx(a), gap, to_idx(b)) for a, gap, b in pos_triples}


def adjacent_pairs(c: Construction, j: int) -> set[tuple[int, int]]:
    return {(a, b) for a, _, b in adjacent_triples(c, j)}


# -- window tuples --------------------------------------------------------------


@dataclass(frozen=True)
class WindowTupleSet:
    level: int
    k: int
    tuples: frozenset[tuple[int, ...]]

    def __len__(self) -> int:
        return len(self.tuples)


def _word_tuples(c: Construction, j: int, slots: list[int], budget: int) -> Iterator[tuple[int, ...]]:
    """Index tuples at the given slots over all level-(j+1) words."""
    g = c.gen(j)
    pset = g.permuted
    permuted = [i for i, s in enumerate(slots) if pset is not None and s in pset]
    if perm_count(pset.size if pset else 0, len(permuted)) > budget:
        raise TupleBudgetExceeded(f"{len(permuted)} permuted slots in a window at level {j}")
    base = list(slots)
    if not permuted:
        yield tuple(c._position_to_index(g, s) for s in base)
        return
    for values in itertools.permutations(pset.as_list(), len(permuted)):
        row = list(base)
        for i, v in zip(permuted, values):
            row[i] = v
        yield tuple(c._position_to_index(g, s) for s in row)


def enumerate_window_tuples(
    c: Construction, j: int, k: int, include_junctions: bool = True, budget: int = 1_000_000
) -> WindowTupleSet:
    """k-tuples of level-j indices occurring as k consecutive aligned blocks."""
    g = c.gen(j)
    n = g.word_count
    if k < 1 or k > n:
        raise ValueError(f"k must lie in [1, {n}]")
    out: set[tuple[int, ...]] = set()
    for s in range(1, n - k + 2):
        out.update(_word_tuples(c, j, list(range(s, s + k)), budget))
        if len(out) > budget:
            raise TupleBudgetExceeded(f"more than {budget} tuples")
    if include_junctions and k > 1:
        if j + 1 > c.max_level:
            raise PrefixBeyondMaxLevel(f"junction tuples at level {j} need level {j + 1}")
        pairs = adjacent_pairs(c, j + 1)
        if len(pairs) * (k - 1) > budget:
            raise TupleBudgetExceeded(f"{len(pairs)} level-{j + 1} adjacencies")
        for a, b in pairs:
            for r in range(1, k):
                tail = tuple(c.slot_value(j + 1, a, s) for s in range(n - r + 1, n + 1))
                head = tuple(c.slot_value(j + 1, b, s) for s in range(1, k - r + 1))
                out.add(tail + head)
    return WindowTupleSet(j, k, frozenset(out))


# -- language profile -------------------------------------------------------------


def language_family(c: Construction, n_max: int) -> tuple[int, list[str]]:
    """A word family whose length-n windows (n <= n_max) are exactly B_n(X).

    Every factor of length <= l_j lies inside two consecutive level-j blocks
    (with the spacer between them, if any), so the family is the set of
    realized block pairs at the lowest materialized level with l_j >= n_max.
    """
    top = c.gens[-1]
    if c.absorbing and n_max > top.word_length:
        period = c.word(top.level, 1)
        reps = -(-(n_max + len(period)) // len(period)) + 1
        return top.level, [period * reps]
    for g in c.gens:
        if g.word_length >= n_max and g.materialized:
            if c.absorbing and g.level == top.level:
                w = g.words[0]
                return g.level, [w + w]
            triples = adjacent_triples(c, g.level)
            return g.level, [g.words[a - 1] + gap + g.words[b - 1] for a, gap, b in sorted(triples)]
    raise MaterializationTooLarge(
        f"no materialized level with word length >= {n_max}; raise the materialization cap"
    )


def language_profile(c: Construction, n_max: int, check_prefix: int = 200_000) -> ComplexityProfile:
    """|B_n(X)| for n <= n_max, with a stabilization check.

    The check recounts from the next level's block pairs when that level is
    materialized, otherwise against the windows of a long prefix of w (which
    only ever under-counts).  ``stabilized_up_to`` is the largest n with equal
    counts for every m <= n.
    """
    level, family = language_family(c, n_max)
    profile = count_factors(build_factor_index(family), n_max)
    notes = []
    reference = None
    nxt = level + 1
    if nxt <= c.max_level and c.gen(nxt).materialized and not (c.absorbing and nxt == c.max_level):
        fam2 = [c.gen(nxt).words[a - 1] + gap + c.gen(nxt).words[b - 1] for a, gap, b in adjacent_triples(c, nxt)]
        reference = count_factors(build_factor_index(fam2), n_max).counts
        notes.append(f"recounted from level {nxt}")
    else:
        length = min(check_prefix, c.gens[-1].word_length if not c.absorbing else check_prefix)
        prefix = c.limit_prefix(length)
        reference = count_factors(build_factor_index(prefix), n_max).counts
        notes.append(f"compared with windows of w[0, {length})")
    stable = 0
    for n in range(1, n_max + 1):
        if reference.get(n) != profile.counts[n]:
            break
        stable = n
    if stable < n_max:
        notes.append(f"NotStabilized: counts agree only up to n={stable}")
    return ComplexityProfile(profile.counts, level, stable, tuple(notes))


# -- counting bounds ----------------------------------------------------------------


@dataclass(frozen=True)
class BoundRow:
    level: int
    k: int
    length: int
    lower: int
    count: int
    upper: int

    @property
    def ok(self) -> bool:
        return self.lower <= self.count <= self.upper


@dataclass(frozen=True)
class StirlingRow:
    kind: str  # "factorial" or "perm"
    n: int
    k: int
    left: float
    middle: float
    right: float
    holds: bool
    asserted: bool


@dataclass
class BoundReport:
    rows: list[BoundRow] = field(default_factory=list)
    stirling: list[StirlingRow] = field(default_factory=list)

    @property
    def violations(self) -> list[BoundRow]:
        return [r for r in self.rows if not r.ok]

    @property
    def ok(self) -> bool:
        return not self.violations and all(s.holds for s in self.stirling if s.asserted)


def stirling_factorial_row(n: int, threshold: int = 10) -> StirlingRow:
    mid = math.lgamma(n + 1)
    left = n * math.log(n) - n
    right = n * math.log(n)
    return StirlingRow("factorial", n, n, left, mid, right, left < mid < right, n >= threshold)


def stirling_perm_row(n: int, k: int, threshold: int = 16) -> StirlingRow:
    mid = math.log(perm_count(n, k))
    left = k * math.log(n) - k
    right = k * math.log(n)
    # the right-hand side is an equality at k = 1, so allow rounding there
    holds = left < mid <= right + 1e-12
    return StirlingRow("perm", n, k, left, mid, right, holds, n >= threshold)


def check_complexity_bounds(
    profile: ComplexityProfile,
    c: Construction,
    levels: Iterable[int] | None = None,
    strict: bool = False,
    factorial_threshold: int = 10,
    perm_threshold: int = 16,
) -> BoundReport:
    """Check P(m, ⌊k^α⌋) <= |B_l| <= l_{j+1} · P(m, ⌊(k+1)^α⌋) for l = k·l_j,
    where m is the number of permuted slots at level j."""
    alpha = c.params.alpha
    report = BoundReport()
    levels = list(levels) if levels is not None else [g.level for g in c.gens[:-1]]
    pairs = set()
    for j in levels:
        g = c.gen(j)
        if g.permuted is None or j + 1 > c.max_level:
            continue
        m = g.permuted.size
        l_next = c.length(j + 1)
        for k in range(1, g.word_count):
            length = k * g.word_length
            if length not in profile.counts:
                continue
            lo_k, hi_k = floor_power(k, alpha), min(m, floor_power(k + 1, alpha))
            row = BoundRow(j, k, length, perm_count(m, min(lo_k, m)), profile.counts[length], l_next * perm_count(m, hi_k))
            report.rows.append(row)
            pairs.add((m, min(lo_k, m)))
            pairs.add((m, hi_k))
        if m >= 2:
            report.stirling.append(stirling_factorial_row(m, factorial_threshold))
    for n, k in sorted(pairs):
        if n >= 2 and k >= 1:
            report.stirling.append(stirling_perm_row(n, k, perm_threshold))
    if strict and report.violations:
        r = report.violations[0]
        raise BoundViolated(
            f"bound violated at l={r.length} (level {r.level}, k={r.k}): "
            f"{r.lower} <= {r.count} <= {r.upper} fails"
        )
    return report


# -- entropy dimension estimation ------------------------------------------------------


@dataclass(frozen=True)
class DimensionEstimate:
    upper_estimate: float
    lower_estimate: float
    method: str
    beta_grid: tuple[float, ...]
    point: float
    residual: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "upper": self.upper_estimate,
            "lower": self.lower_estimate,
            "point": self.point,
            "method": self.method,
            "beta_grid": list(self.beta_grid),
            "residual": self.residual,
        }


def _tail_arrays(profile: ComplexityProfile) -> tuple[np.ndarray, np.ndarray]:
    ns = np.array(sorted(profile.counts), dtype=np.int64)
    n_max = int(ns.max())
    # upper half on a log scale, and where log log is defined
    keep = (ns >= max(3, math.isqrt(n_max))) & np.array([profile.counts[int(n)] >= 2 for n in ns])
    ns = ns[keep]
    loglog_b = np.array([math.log(math.log(profile.counts[int(n)])) for n in ns])
    return ns.astype(float), loglog_b


def _fit(ns: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Fit log log|B_n| = τ log n + γ log log n + c; returns (τ, rms residual)."""
    x = np.log(ns)
    design = np.column_stack([x, np.log(x), np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid ** 2)))


def estimate_entropy_dimension(
    profile: ComplexityProfile,
    method: str = "loglog",
    beta_grid: Iterable[float] | None = None,
    windows: int = 2,
) -> DimensionEstimate:
    """Estimate the critical exponent of log|B_n| / n^β.

    ``loglog``: regress log log|B_n| on log n (with a log log n term that
    absorbs polynomial factors) over the upper half of the log-n range; the
    upper/lower estimates are the largest/smallest slope over ``windows``
    consecutive sub-ranges.  ``scan``: for each β in the grid, classify
    log|B_n|/n^β as decaying or growing in every sub-range; the lower estimate
    is the largest β that grows everywhere, the upper the smallest β that
    decays everywhere.
    """
    if len(profile.counts) < 16:
        raise InsufficientData("need at least 16 profile entries")
    ns, y = _tail_arrays(profile)
    if len(ns) < 8:
        raise InsufficientData("too few usable profile entries in the tail")
    grid = tuple(beta_grid) if beta_grid is not None else tuple(round(0.01 * i, 2) for i in range(101))
    tau, resid = _fit(ns, y)
    chunks = [ch for ch in np.array_split(np.arange(len(ns)), windows) if len(ch) >= 4]
    local = [_fit(ns[ch], y[ch])[0] for ch in chunks] or [tau]
    clip = lambda v: float(min(1.0, max(0.0, v)))  # noqa: E731
    diagnostics: dict = {"local_slopes": local}
    if method == "loglog":
        upper, lower = clip(max(local + [tau])), clip(min(local + [tau]))
    elif method == "scan":
        # slope of log(log|B_n| / n^β) in each sub-range is (local τ - β)
        grows = {b: all(t - b > 0 for t in local) for b in grid}
        decays = {b: all(t - b < 0 for t in local) for b in grid}
        diagnostics["grows"] = grows
        diagnostics["decays"] = decays
        growing = [b for b in grid if grows[b]]
        decaying = [b for b in grid if decays[b]]
        lower = clip(max(growing) if growing else 0.0)
        upper = clip(min(decaying) if decaying else 1.0)
    else:
        raise ValueError(f"unknown method {method!r}")
    if lower > upper:
        lower, upper = upper, lower
    return DimensionEstimate(upper, lower, method, grid, clip(tau), resid, diagnostics)


def synthetic_profile(fn, n_max: int) -> ComplexityProfile:
    return ComplexityProfile({n: int(fn(n)) for n in range(1, n_max + 1)})


def exp_power_profile(tau: float, n_max: int) -> ComplexityProfile:
    """|B_n| = ⌈exp(n^τ)⌉ as an exact integer."""
    ctx = decimal.Context(prec=60)
    counts = {}
    for n in range(1, n_max + 1):
        e = ctx.exp(decimal.Decimal(n) ** decimal.Decimal(repr(tau)))
        counts[n] = int(e.to_integral_value(rounding=decimal.ROUND_CEILING))
    return ComplexityProfile(counts)


# -- growth lemma ---------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthRow:
    level: int
    log_count: float
    upper: float
    lower: float
    upper_holds: bool
    lower_holds: bool
    status: str  # "asserted", "informational", "degenerate"
    lower_asserted: bool = False


def _upper_exact(n: int, length: int, j: int) -> bool:
    """log n <= (log 2 / 2^(j-1)) · sqrt(length), decided exactly where possible."""
    lhs = n ** (2 ** (j - 1))
    r = math.isqrt(length)
    if r * r == length:
        return lhs <= 2 ** r
    if lhs <= 2 ** r:
        return True
    if lhs > 2 ** (r + 1):
        return False
    return math.log(n) <= math.log(2) / 2 ** (j - 1) * math.sqrt(length)


def check_growth_lemma(c: Construction, strict: bool = False) -> list[GrowthRow]:
    """Finite-level form of the growth bounds on log N_j against sqrt(l_j)."""
    rows = []
    lengths = [g.word_length for g in c.gens]
    counts = [g.word_count for g in c.gens]
    l1_root = math.isqrt(lengths[0])
    premise = l1_root * l1_root == lengths[0] and counts[0] == 2 ** l1_root
    squares_so_far = True
    for j in range(1, len(c.gens) + 1):
        n, length = counts[j - 1], lengths[j - 1]
        logn = math.log(n) if n > 0 else float("-inf")
        upper = math.log(2) / 2 ** (j - 1) * math.sqrt(length)
        lower = upper - sum(2.0 ** -(j - 1 - i) * math.sqrt(length / lengths[i - 1]) for i in range(1, j))
        up_ok = _upper_exact(n, length, j)
        lo_ok = logn >= lower - 1e-9 * max(1.0, abs(lower))
        # counts that stop growing sit on a fixed point of the recurrence
        degenerate = n <= 2 or (j > 1 and n <= counts[j - 2])
        if degenerate:
            status = "degenerate"
        elif squares_so_far:
            status = "asserted"
        else:
            status = "informational"
        lower_asserted = status == "asserted" and premise
        rows.append(GrowthRow(j, logn, upper, lower, up_ok, lo_ok, status, lower_asserted))
        if strict and status == "asserted" and (not up_ok or (lower_asserted and not lo_ok)):
            raise LemmaBoundViolated(f"growth bound fails at level {j}")
        r = math.isqrt(n)
        squares_so_far = squares_so_far and r * r == n
    return rows
