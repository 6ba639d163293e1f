"""Brute-force reference implementations.

These enumerate sequences directly and share no code with the counting and
decoding routines they check. They are only practical for short codes.
"""

from __future__ import annotations

import itertools
from collections import Counter

from .codebook import verify_gram

__all__ = ["all_prefixes", "enumerate_a_table", "enumerate_pool", "enumerate_prefix_counts"]


def enumerate_a_table(p: int, k: int, tail) -> Counter:
    """``A_k(q | tail)`` for all ``q`` by listing every ``d_1..d_k``."""
    tail = tuple(tail)
    out: Counter = Counter()
    for d in itertools.product((-1, 1), repeat=k):
        seq = tail + d
        off = len(tail)
        q = tuple(sum(seq[off + i - j] * seq[off + i] for i in range(k)) for j in range(1, p))
        out[q] += 1
    return out


def _offdiag(bits, p: int, q: int | None) -> tuple[int, ...]:
    gram = verify_gram(bits, p, q)
    if q is None:
        return tuple(int(gram[0, j]) for j in range(1, p))
    return tuple(int(g[0, 1]) for g in gram)


def enumerate_pool(n: int, p: int, offdiag, q: int | None = None) -> list[tuple[int, ...]]:
    """All ``b`` with ``b_1 = -1`` meeting the off-diagonal target, in pool order.

    Quasi-static targets fix ``(c_1..c_{P-1})``; sub-block targets (``P = 2``)
    fix one ``c_k`` per block. Pool order is lexicographic with ``-1 < +1``.
    """
    offdiag = tuple(offdiag)
    return [w for w in itertools.product((-1, 1), repeat=n)
            if w[0] == -1 and _offdiag(w, p, q) == offdiag]


def enumerate_prefix_counts(n: int, p: int, offdiag, q: int | None = None) -> Counter:
    """Number of pool members below every prefix (lengths ``1..n``)."""
    out: Counter = Counter()
    for w in enumerate_pool(n, p, offdiag, q):
        for ell in range(1, n + 1):
            out[w[:ell]] += 1
    return out


def all_prefixes(n: int):
    """Every ``±1`` prefix with first bit ``-1``, of every length ``1..n``."""
    for ell in range(1, n + 1):
        for rest in itertools.product((-1, 1), repeat=ell - 1):
            yield (-1,) + rest
