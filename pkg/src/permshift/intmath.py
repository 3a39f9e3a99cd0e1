"""Exact integer helpers: roots, floors of rational powers, permutation counts
and lexicographic permutation ranking."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache


def iroot(n: int, k: int) -> int:
    """Largest integer r with r**k <= n."""
    if n < 0 or k < 1:
        raise ValueError("iroot needs n >= 0 and k >= 1")
    if k == 1 or n < 2:
        return n
    if k == 2:
        return math.isqrt(n)
    if n.bit_length() <= 52:
        r = int(round(n ** (1.0 / k)))
    else:
        # Newton iteration from an upper bound
        r = 1 << ((n.bit_length() + k - 1) // k)
        while True:
            s = ((k - 1) * r + n // r ** (k - 1)) // k
            if s >= r:
                break
            r = s
    while r ** k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def floor_power(n: int, alpha: Fraction) -> int:
    """floor(n ** alpha) for a positive rational exponent, computed exactly."""
    alpha = Fraction(alpha)
    return iroot(n ** alpha.numerator, alpha.denominator)


def floor_inverse(alpha: Fraction) -> int:
    """floor(1 / alpha)."""
    alpha = Fraction(alpha)
    return alpha.denominator // alpha.numerator


def perm_count(n: int, k: int) -> int:
    """Number of k-permutations of n, P(n, k)."""
    if k < 0 or k > n:
        return 0
    return math.perm(n, k)


def no_double_zero_count(m: int) -> int:
    """Binary strings of length m with no two consecutive zeros (Fibonacci F(m+2))."""
    a, b = 1, 2  # m = 0, m = 1
    if m == 0:
        return 1
    for _ in range(m - 1):
        a, b = b, a + b
    return b


@lru_cache(maxsize=None)
def _no00_counts(m: int) -> tuple[int, ...]:
    return tuple(no_double_zero_count(i) for i in range(m + 1))


def unrank_no_double_zero(rank: int, m: int, prev_zero: bool = False) -> str:
    """The rank-th (0-based, lexicographic) length-m string with no "00".

    ``prev_zero`` means the symbol preceding the string is a 0.
    """
    counts = _no00_counts(m)
    out = []
    for pos in range(m):
        rest = m - pos - 1
        if not prev_zero:
            # strings starting with 0 continue with a forced 1 (or end)
            zero_block = counts[rest - 1] if rest >= 1 else 1
            if rank < zero_block:
                out.append("0")
                prev_zero = True
                continue
            rank -= zero_block
        out.append("1")
        prev_zero = False
    if rank != 0:
        raise ValueError("rank out of range")
    return "".join(out)


def unrank_permutation(rank: int, n: int) -> list[int]:
    """Permutation of range(n) with the given lexicographic rank."""
    if rank < 0:
        raise ValueError("rank out of range")
    items = list(range(n))
    if rank == 0:
        return items
    out = []
    digits = []
    for radix in range(1, n + 1):
        rank, d = divmod(rank, radix)
        digits.append(d)
    if rank:
        raise ValueError("rank out of range")
    for d in reversed(digits):
        out.append(items.pop(d))
    return out


def rank_permutation(perm) -> int:
    """Lexicographic rank of a permutation of range(n)."""
    n = len(perm)
    items = list(range(n))
    rank = 0
    for i, v in enumerate(perm):
        d = items.index(v)
        rank = rank * (n - i) + d
        items.pop(d)
    return rank
