"""Rule-based construction of self-orthogonal codes.

The candidate pool of a code tree is every ``±1`` sequence with ``b_1 = -1``
whose convolution matrix has a prescribed Gram matrix ``B^T B``. Candidates
are ranked in binary-alphabetical order (``-1`` sorts before ``+1``) and every
``delta``-th one becomes a codeword. Encoding never lists the pool: it walks
the tree, choosing each bit by comparing a running rank against the number of
completions below the ``-1`` branch.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .channel import block_conv_matrices, block_ranges, num_blocks

__all__ = [
    "CodeError",
    "NotACodewordError",
    "Codeword",
    "GramTarget",
    "CodeSpec",
    "Codebook",
    "PairBlockCounter",
    "ToeplitzCounter",
    "admissible_offdiagonals",
    "count_suffixes_p2",
    "count_suffixes_blocks",
    "count_table_general",
    "a_table",
    "make_spec",
    "encode",
    "codeword_index",
    "verify_gram",
    "enumerate_codebook",
    "format_codebook",
    "format_a_tables_csv",
]


class CodeError(ValueError):
    """Invalid code parameters or counting query."""


class NotACodewordError(CodeError):
    """The sequence is not one of the selected codewords."""


def _check_bits(bits: Iterable[int]) -> tuple[int, ...]:
    out = tuple(int(b) for b in bits)
    if any(b not in (-1, 1) for b in out):
        raise CodeError("bits must be +1 or -1")
    return out


@dataclass(frozen=True)
class Codeword:
    """A codeword and the index of the code tree it belongs to."""

    bits: tuple[int, ...]
    tree: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bits", _check_bits(self.bits))
        if self.bits and self.bits[0] != -1:
            raise CodeError("codewords start with b1 = -1")

    def __len__(self):
        return len(self.bits)

    def __str__(self):
        return "".join("+" if b > 0 else "-" for b in self.bits)


@dataclass(frozen=True)
class GramTarget:
    """Required ``B^T B`` (one matrix per sub-block) for one code tree."""

    blocks: tuple[tuple[tuple[int, ...], ...], ...]
    offdiag: tuple[int, ...]

    @classmethod
    def from_arrays(cls, mats: Sequence[np.ndarray], offdiag: Sequence[int]) -> "GramTarget":
        blocks = tuple(tuple(tuple(int(v) for v in row) for row in np.asarray(m)) for m in mats)
        return cls(blocks=blocks, offdiag=tuple(int(c) for c in offdiag))

    @property
    def matrix(self) -> np.ndarray:
        if len(self.blocks) != 1:
            raise AttributeError("target has several sub-blocks; use arrays()")
        return np.array(self.blocks[0], dtype=np.int64)

    def arrays(self) -> list[np.ndarray]:
        return [np.array(b, dtype=np.int64) for b in self.blocks]

    def matches(self, grams: Sequence[np.ndarray]) -> bool:
        mine = self.arrays()
        return len(mine) == len(grams) and all(np.array_equal(a, b) for a, b in zip(mine, grams))


# ---------------------------------------------------------------------------
# Counting
# ---------------------------------------------------------------------------

class _PairState(NamedTuple):
    level: int
    last: int
    m: int  # running pair sum of the sub-block holding pair `level`
    ok: bool = True  # every completed sub-block met its target


class PairBlockCounter:
    """Completion counts for ``P = 2`` with pair sums fixed per sub-block.

    Pair ``j`` (``b_{j-1} b_j``, ``2 <= j <= N``) lands in the sub-block that
    holds sample ``j``. Once ``b_l`` is known the remaining pairs map one to one
    onto the remaining bits, so the count factors into one binomial per
    sub-block. A single block reproduces the quasi-static closed form.
    """

    def __init__(self, n: int, q: int | None, offdiag: Sequence[int]):
        if n < 2:
            raise CodeError("codeword length must be at least 2")
        self.n = n
        self.q = q
        self.m_blocks = num_blocks(n, 2, q)
        self.c = tuple(int(c) for c in offdiag)
        if len(self.c) != self.m_blocks:
            raise CodeError(f"expected {self.m_blocks} off-diagonal values, got {len(self.c)}")
        # pair_block[j] for 1-based pair index j; entries 0 and 1 unused
        self.pair_block = [0, 0] + [self._block_of_sample(j) for j in range(2, n + 1)]
        self.npairs = [0] * self.m_blocks
        self.end_pair = [0] * self.m_blocks
        for j in range(2, n + 1):
            self.npairs[self.pair_block[j]] += 1
            self.end_pair[self.pair_block[j]] = j
        for k in range(self.m_blocks):
            if self.npairs[k] == 0:
                self.end_pair[k] = self.end_pair[k - 1] if k else 1
            if (self.npairs[k] + self.c[k]) % 2 or abs(self.c[k]) > self.npairs[k]:
                raise CodeError(
                    f"off-diagonal {self.c[k]} has wrong parity for sub-block {k + 1} "
                    f"with {self.npairs[k]} pairs")
        self.suffix = [1] * (self.m_blocks + 1)
        for k in range(self.m_blocks - 1, -1, -1):
            full = comb(self.npairs[k], (self.npairs[k] + self.c[k]) // 2)
            self.suffix[k] = self.suffix[k + 1] * full
        # suffix[k] as used below is the product over blocks strictly after k
        self.after = self.suffix[1:]

    def _block_of_sample(self, j: int) -> int:
        return 0 if self.q is None else (j - 1) // self.q

    def root(self) -> _PairState:
        return _PairState(1, -1, 0)

    def state_of(self, prefix: Sequence[int]) -> _PairState:
        prefix = _check_bits(prefix)
        if not 1 <= len(prefix) <= self.n:
            raise CodeError(f"prefix length must be in 1..{self.n}, got {len(prefix)}")
        st = _PairState(1, prefix[0], 0)
        for b in prefix[1:]:
            st = self.extend(st, b)
        return st

    def extend(self, st: _PairState, bit: int) -> _PairState:
        j = st.level + 1  # index of the new pair
        ok, m = st.ok, st.m
        if st.level >= 2 and self.pair_block[j] != self.pair_block[st.level]:
            ok = ok and m == self.c[self.pair_block[st.level]]
            m = 0
        elif st.level < 2:
            m = 0
        return _PairState(j, bit, m + st.last * bit, ok)

    def count(self, st: _PairState) -> int:
        level, m = st.level, st.m
        if not st.ok:
            return 0
        if level == self.n:
            return int(m == self.c[self.pair_block[level]])
        kn = self.pair_block[level + 1]
        if level >= 2 and self.pair_block[level] != kn:
            if m != self.c[self.pair_block[level]]:
                return 0
            m = 0
        r = self.end_pair[kn] - level
        t = r + self.c[kn] - m
        if t < 0 or t > 2 * r or t % 2:
            return 0
        return comb(r, t // 2) * self.after[kn]

    def kernel_tables(self):
        """Arrays describing this counter for the compiled search kernel."""
        return (np.array(self.pair_block, dtype=np.int64),
                np.array(self.end_pair, dtype=np.int64),
                np.array(self.c, dtype=np.int64),
                np.array(self.after, dtype=np.int64))


def _normalize_tail(tail: tuple[int, ...]) -> tuple[int, ...]:
    for d in tail:
        if d:
            return tuple(-x for x in tail) if d > 0 else tail
    return tail


@lru_cache(maxsize=None)
def _a_count(k: int, q: tuple[int, ...], tail: tuple[int, ...]) -> int:
    if any(abs(x) > k for x in q):
        return 0
    if k == 0:
        return int(not any(q))
    total = 0
    for d in (-1, 1):
        # q_j loses its first term d_{1-j} d_1; d_{1-j} is tail[-j]
        nq = tuple(qj - tail[-j] * d for j, qj in enumerate(q, start=1))
        total += _a_count(k - 1, nq, _normalize_tail(tail[1:] + (d,)))
    return total


def count_table_general(p: int, k: int, q: Sequence[int], tail: Sequence[int]) -> int:
    """Number of ``d_1..d_k`` with ``sum_i d_{i-j} d_i = q_j`` for every lag ``j``.

    ``tail`` holds ``d_{2-P} .. d_0``. Results are memoized over the recursion
    that peels off ``d_1``.
    """
    if p < 2:
        raise CodeError("P must be at least 2")
    if k < 0:
        raise CodeError("k must be non-negative")
    q = tuple(int(x) for x in q)
    tail = tuple(int(x) for x in tail)
    if len(q) != p - 1 or len(tail) != p - 1:
        raise CodeError(f"q and tail must have length {p - 1}")
    if any(abs(x) > k for x in q):
        raise CodeError(f"|q_j| must not exceed k={k}")
    if any(d not in (-1, 1) for d in tail):
        raise CodeError("tail entries must be +1 or -1")
    return _a_count(k, q, _normalize_tail(tail))


def a_table(p: int, k: int, tail: Sequence[int]) -> dict[tuple[int, ...], int]:
    """Every ``A_k(q | tail)`` keyed by ``q``."""
    return {q: count_table_general(p, k, q, tail)
            for q in itertools.product(range(-k, k + 1), repeat=p - 1)}


class _ToeplitzState(NamedTuple):
    level: int
    m: tuple[int, ...]
    tail: tuple[int, ...]


class ToeplitzCounter:
    """Completion counts for quasi-static codes with any ``P`` via ``A_k`` tables."""

    def __init__(self, n: int, p: int, offdiag: Sequence[int]):
        if n < 2:
            raise CodeError("codeword length must be at least 2")
        self.n, self.p = n, p
        self.c = tuple(int(c) for c in offdiag)
        if len(self.c) != p - 1:
            raise CodeError(f"expected {p - 1} off-diagonal values")

    def root(self) -> _ToeplitzState:
        return _ToeplitzState(1, (0,) * (self.p - 1), (0,) * (self.p - 2) + (-1,))

    def state_of(self, prefix: Sequence[int]) -> _ToeplitzState:
        prefix = _check_bits(prefix)
        if not 1 <= len(prefix) <= self.n:
            raise CodeError(f"prefix length must be in 1..{self.n}")
        st = _ToeplitzState(1, (0,) * (self.p - 1), (0,) * (self.p - 2) + (prefix[0],))
        for b in prefix[1:]:
            st = self.extend(st, b)
        return st

    def extend(self, st: _ToeplitzState, bit: int) -> _ToeplitzState:
        m = tuple(mj + st.tail[-j] * bit for j, mj in enumerate(st.m, start=1))
        return _ToeplitzState(st.level + 1, m, st.tail[1:] + (bit,))

    def count(self, st: _ToeplitzState) -> int:
        q = tuple(c - m for c, m in zip(self.c, st.m))
        return _a_count(self.n - st.level, q, _normalize_tail(st.tail))


def _target_offdiag(target) -> tuple[int, ...]:
    if isinstance(target, GramTarget):
        return target.offdiag
    mat = np.asarray(target)
    return tuple(int(mat[0, j]) for j in range(1, mat.shape[0]))


def count_suffixes_p2(n: int, target, prefix: Sequence[int]) -> int:
    """Closed-form count of length-``n`` completions of ``prefix`` (``P = 2``).

    ``binom(n - l, (n - l + c - m_l) / 2)`` when ``|c - m_l| <= n - l``, where
    ``c`` is the target off-diagonal and ``m_l`` the running pair sum.
    """
    prefix = _check_bits(prefix)
    ell = len(prefix)
    if not 1 <= ell <= n:
        raise CodeError(f"prefix length must be in 1..{n}, got {ell}")
    offdiag = _target_offdiag(target)
    if len(offdiag) != 1:
        raise CodeError("count_suffixes_p2 needs a 2x2 quasi-static target")
    c = offdiag[0]
    if (n - 1 + c) % 2:
        raise CodeError(f"off-diagonal {c} has wrong parity for N={n}")
    m = sum(a * b for a, b in zip(prefix, prefix[1:]))
    r = n - ell
    if abs(c - m) > r:
        return 0
    return comb(r, (r + c - m) // 2)


def count_suffixes_blocks(n: int, q: int, target, prefix: Sequence[int]) -> int:
    """Completions of ``prefix`` meeting every sub-block Gram target (``P = 2``)."""
    if q < 2:
        raise CodeError("sub-block period Q must be at least P = 2")
    offdiag = target.offdiag if isinstance(target, GramTarget) else tuple(target)
    counter = PairBlockCounter(n, q, offdiag)
    return counter.count(counter.state_of(prefix))


# ---------------------------------------------------------------------------
# Targets and code parameters
# ---------------------------------------------------------------------------

def verify_gram(codeword, p: int, q: int | None = None):
    """``B^T B`` (quasi-static) or the list of ``B_k^T B_k``, in exact integers."""
    mats = [B.T @ B for B in block_conv_matrices(codeword, p, q)]
    return mats[0] if q is None else mats


def _block_diagonals(n: int, p: int, q: int | None) -> list[tuple[int, ...]]:
    # diagonal entry j of block k counts the real bits b_{s-j} over samples s in block k
    out = []
    for a, b in block_ranges(n, p, q):
        out.append(tuple(sum(1 for s in range(a, b) if 0 <= s - j < n) for j in range(p)))
    return out


def admissible_offdiagonals(n: int, p: int = 2, q: int | None = None) -> list[tuple[int, ...]]:
    """Off-diagonal vectors with entries in ``{-1, 0, 1}`` and feasible parity.

    Quasi-static: one entry per lag, lag ``j`` summing ``n - j`` products.
    Sub-block (``P = 2``): one entry per sub-block. Ordered lexicographically
    with ``-1 < 0 < +1``.
    """
    if q is None:
        sizes = [n - j for j in range(1, p)]
    else:
        if p != 2:
            raise CodeError("sub-block codes are defined for P = 2 only")
        if q < p:
            raise CodeError(f"sub-block period Q={q} must be at least P={p}")
        counter_sizes = [0] * num_blocks(n, p, q)
        for j in range(2, n + 1):
            counter_sizes[(j - 1) // q] += 1
        sizes = counter_sizes
    choices = [[c for c in (-1, 0, 1) if (s + c) % 2 == 0 and abs(c) <= s] for s in sizes]
    return [tuple(v) for v in itertools.product(*choices)]


def make_target(n: int, p: int, q: int | None, offdiag: Sequence[int]) -> GramTarget:
    offdiag = tuple(int(c) for c in offdiag)
    if q is None:
        mat = np.full((p, p), 0, dtype=np.int64)
        for i in range(p):
            for j in range(p):
                mat[i, j] = n if i == j else offdiag[abs(i - j) - 1]
        return GramTarget.from_arrays([mat], offdiag)
    mats = []
    for (d0, d1), c in zip(_block_diagonals(n, p, q), offdiag):
        mats.append(np.array([[d0, c], [c, d1]], dtype=np.int64))
    return GramTarget.from_arrays(mats, offdiag)


@dataclass(frozen=True)
class CodeSpec:
    """Parameters of an ``(N, K)`` code and its resolved Gram targets."""

    n: int
    k: int
    p: int
    q: int | None
    mode: str
    targets: tuple[GramTarget, ...]
    deltas: tuple[int, ...]

    @property
    def theta(self) -> int:
        return len(self.targets)

    @property
    def per_tree(self) -> int:
        return 2 ** self.k // self.theta

    @property
    def length(self) -> int:
        return self.n + self.p - 1

    @property
    def num_blocks(self) -> int:
        return num_blocks(self.n, self.p, self.q)

    @property
    def delta(self) -> int:
        if len(set(self.deltas)) != 1:
            raise AttributeError("trees use different strides; see deltas")
        return self.deltas[0]

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def counters(self) -> tuple:
        if self.p == 2:
            return tuple(PairBlockCounter(self.n, self.q, t.offdiag) for t in self.targets)
        return tuple(ToeplitzCounter(self.n, self.p, t.offdiag) for t in self.targets)

    def pool_size(self, tree: int) -> int:
        c = self.counters[tree]
        return c.count(c.root())

    def tree_of(self, grams) -> int:
        grams = [grams] if isinstance(grams, np.ndarray) else list(grams)
        for i, t in enumerate(self.targets):
            if t.matches(grams):
                return i
        raise NotACodewordError("Gram matrix matches no code tree")

    def __str__(self):
        q = "" if self.q is None else f", Q={self.q}"
        return f"({self.n},{self.k}) {self.mode}-tree code, P={self.p}{q}"


def make_spec(n: int, k: int, p: int = 2, q: int | None = None,
              mode: str | None = None) -> CodeSpec:
    """Resolve the code trees and per-tree stride for an ``(n, k)`` code.

    ``mode`` is ``"single"`` or ``"double"``; ``None`` picks double whenever
    two Gram targets are admissible (e.g. ``N`` even with ``P = 2``).
    """
    if n < 2 or k < 1 or p < 2:
        raise CodeError(f"need N >= 2, K >= 1, P >= 2 (got N={n}, K={k}, P={p})")
    if q is not None and p != 2:
        raise CodeError("sub-block codes are defined for P = 2 only")
    if q is not None and q < p:
        raise CodeError(f"sub-block period Q={q} must be at least P={p}")
    choices = admissible_offdiagonals(n, p, q)
    if mode is None:
        mode = "double" if len(choices) >= 2 else "single"
    if mode not in ("single", "double"):
        raise CodeError(f"mode must be 'single' or 'double', got {mode!r}")
    theta = 1 if mode == "single" else 2
    if len(choices) < theta:
        raise CodeError(f"only {len(choices)} admissible Gram target(s) for N={n}, P={p}; "
                        f"cannot build a {mode}-tree code")
    per_tree = 2 ** k // theta
    if per_tree < 2:
        raise CodeError(f"degenerate rate: 2^K/Theta = {per_tree} < 2")
    targets = tuple(make_target(n, p, q, c) for c in choices[:theta])
    spec = CodeSpec(n=n, k=k, p=p, q=q, mode=mode, targets=targets, deltas=(0,) * theta)
    deltas = []
    for tree in range(theta):
        pool = spec.pool_size(tree)
        if pool < per_tree:
            raise CodeError(f"code too large: tree {tree} has {pool} candidates "
                            f"but {per_tree} codewords are requested")
        deltas.append((pool - 1) // (per_tree - 1))
    final = CodeSpec(n=n, k=k, p=p, q=q, mode=mode, targets=targets, deltas=tuple(deltas))
    final.__dict__["counters"] = spec.counters
    return final


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

def encode(spec: CodeSpec, index: int) -> Codeword:
    """Codeword number ``index`` (``0 <= index < 2^K``)."""
    index = int(index)
    if not 0 <= index < 2 ** spec.k:
        raise CodeError(f"index must be in 0..{2 ** spec.k - 1}, got {index}")
    tree, i = divmod(index, spec.per_tree)
    counter = spec.counters[tree]
    rho = i * spec.deltas[tree]
    rho_min = 0
    st = counter.root()
    bits = [-1]
    for _ in range(1, spec.n):
        lower = counter.extend(st, -1)
        gamma = counter.count(lower)
        if rho < rho_min + gamma:
            st, b = lower, -1
        else:
            st, b = counter.extend(st, 1), 1
            rho_min += gamma
        bits.append(b)
    return Codeword(tuple(bits), tree)


def pool_rank(spec: CodeSpec, tree: int, bits: Sequence[int]) -> int:
    """Position of ``bits`` in the ordered candidate pool of ``tree``."""
    counter = spec.counters[tree]
    bits = _check_bits(bits)
    if len(bits) != spec.n or bits[0] != -1:
        raise NotACodewordError("wrong length or b1 != -1")
    st = counter.root()
    rho = 0
    for b in bits[1:]:
        if b > 0:
            rho += counter.count(counter.extend(st, -1))
        st = counter.extend(st, b)
        if counter.count(st) == 0:
            raise NotACodewordError("sequence leaves the candidate pool")
    return rho


def codeword_index(spec: CodeSpec, codeword) -> int:
    """Inverse of :func:`encode`."""
    bits = _check_bits(getattr(codeword, "bits", codeword))
    if len(bits) != spec.n:
        raise NotACodewordError(f"expected {spec.n} bits, got {len(bits)}")
    tree = spec.tree_of(verify_gram(bits, spec.p, spec.q))
    rho = pool_rank(spec, tree, bits)
    i, rem = divmod(rho, spec.deltas[tree])
    if rem or i >= spec.per_tree:
        raise NotACodewordError("candidate is not among the selected codewords")
    return tree * spec.per_tree + i


@dataclass
class Codebook:
    """All ``2^K`` codewords of a spec, as a dense ``int8`` array."""

    spec: CodeSpec
    bits: np.ndarray
    trees: np.ndarray

    def __len__(self):
        return self.bits.shape[0]

    def codeword(self, index: int) -> Codeword:
        return Codeword(tuple(int(b) for b in self.bits[index]), int(self.trees[index]))

    @cached_property
    def oracle_tensors(self) -> tuple[np.ndarray, np.ndarray]:
        """Stacked convolution matrices ``(2^K, L, P)`` and block Gram inverses ``(2^K, M, P, P)``."""
        spec = self.spec
        n, p = spec.n, spec.p
        ranges = block_ranges(n, p, spec.q)
        conv = np.zeros((len(self), spec.length, p))
        for j in range(p):
            conv[:, j:j + n, j] = self.bits
        dinv = np.empty((len(self), len(ranges), p, p))
        for k, (a, b) in enumerate(ranges):
            blk = conv[:, a:b, :]
            dinv[:, k] = np.linalg.pinv(np.einsum("csi,csj->cij", blk, blk))
        return conv, dinv

    @cached_property
    def tree_nodes(self) -> int:
        """Nodes of the code tree(s) at levels ``1..N-1`` plus the origin."""
        nodes = {(int(t), tuple(row[:ell])) for t, row in zip(self.trees, self.bits.tolist())
                 for ell in range(1, self.spec.n)}
        return len(nodes) + 1


def enumerate_codebook(spec: CodeSpec) -> Codebook:
    words = [encode(spec, i) for i in range(2 ** spec.k)]
    bits = np.array([w.bits for w in words], dtype=np.int8)
    trees = np.array([w.tree for w in words], dtype=np.int64)
    return Codebook(spec=spec, bits=bits, trees=trees)


def format_codebook(codebook: Codebook) -> str:
    """Tab-separated ``index, tree, +/- string`` lines."""
    lines = []
    for i, (row, tree) in enumerate(zip(codebook.bits, codebook.trees)):
        lines.append(f"{i}\t{int(tree)}\t" + "".join("+" if b > 0 else "-" for b in row))
    return "\n".join(lines) + "\n"


def format_a_tables_csv(p: int, ks: int | Iterable[int]) -> str:
    """``A_k`` tables as CSV, one table per ``k`` and tail class (first tail bit ``-1``).

    ``ks`` is a single ``k`` or an iterable of them. For ``P = 3`` each row
    is one ``(k, tail, q1)`` and the columns run over ``q2`` from ``-kmax`` to
    ``kmax``; entries outside ``|q2| <= k`` are written as 0. Larger ``P`` are
    written in long form, one row per ``(k, tail, q)``.
    """
    ks = [ks] if isinstance(ks, int) else list(ks)
    if not ks or min(ks) < 1:
        raise CodeError("k must be at least 1")
    tails = [(-1,) + rest for rest in itertools.product((-1, 1), repeat=p - 2)]
    rows = []
    if p == 3:
        kmax = max(ks)
        cols = list(range(-kmax, kmax + 1))
        rows.append(",".join(["k", "tail", "q1"] + [f"q2={v}" for v in cols]))
        for k in ks:
            for tail in tails:
                tag = ":".join(str(d) for d in tail)
                for q1 in range(-k, k + 1):
                    vals = [count_table_general(p, k, (q1, q2), tail) if abs(q2) <= k else 0
                            for q2 in cols]
                    rows.append(",".join([str(k), tag, str(q1)] + [str(v) for v in vals]))
    else:
        rows.append(",".join(["k", "tail"] + [f"q{j}" for j in range(1, p)] + ["count"]))
        for k in ks:
            for tail in tails:
                tag = ":".join(str(d) for d in tail)
                for q, v in a_table(p, k, tail).items():
                    rows.append(",".join([str(k), tag] + [str(x) for x in q] + [str(v)]))
    return "\n".join(rows) + "\n"
