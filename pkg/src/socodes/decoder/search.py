"""Maximum-likelihood priority-first search over one or more code trees.

All trees share one stack. Every path carries its recursive metric ``g``,
the carries needed to extend it, and the pool interval ``[rho, rho + cnt)``
of the candidates below it. A branch is kept only if that interval contains
a selected codeword (a multiple of the tree's stride), so the search walks
the code tree rather than the full candidate pool.

Two backends implement the same search. ``"python"`` follows the metric
recursions literally (``u`` carries for ``g``, ``v`` carries for ``h2``) and
works for any ``P``. ``"numba"`` is a compiled version for ``P = 2``.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, TextIO

import numpy as np

from ..codebook import CodeSpec, Codeword
from .weights import DecoderWeights, compute_weights

__all__ = [
    "DEFAULT_STACK_CAP",
    "DecodeResult",
    "PathState",
    "SearchStack",
    "StackOverflow",
    "decode_priority",
    "decode_priority_fast",
    "g_extend",
    "heuristic_h2",
    "origin_state",
    "write_trace",
]

DEFAULT_STACK_CAP = 2 ** 20
HEURISTICS = ("h1", "h2")
TRACE_HEADER = ("ordinal", "level", "tree", "f", "g", "h")


class StackOverflow(RuntimeError):
    """The stack grew beyond its capacity."""


class PathState:
    """A partial path ``b_(l)`` in code tree ``tree``.

    Attributes
    ----------
    bits : tuple of int
        The ``l`` bits chosen so far.
    tree : int
        Code tree index.
    g : float
        Recursive path metric.
    u : ndarray, shape (M, P)
        ``u_j = sum_{n<l} b_n conj(y_{n+j}) + b_l conj(y_{l+j}) / 2`` per sub-block.
    v : ndarray, shape (M, N)
        ``v_m = sum_{n<=l} w_mn b_n`` per sub-block (look-ahead carries).
    """

    __slots__ = ("bits", "tree", "g", "h", "u", "v", "counter_state", "rho", "count", "ordinal")

    def __init__(self, bits, tree, g, u, v, h=0.0, counter_state=None, rho=0, count=0, ordinal=-1):
        self.bits = bits
        self.tree = tree
        self.g = g
        self.h = h
        self.u = u
        self.v = v
        self.counter_state = counter_state
        self.rho = rho
        self.count = count
        self.ordinal = ordinal

    @property
    def level(self) -> int:
        return len(self.bits)

    @property
    def f(self) -> float:
        return self.g + self.h

    def __repr__(self):
        word = "".join("+" if b > 0 else "-" for b in self.bits)
        return f"PathState(tree={self.tree}, bits={word!r}, g={self.g:.6g}, h={self.h:.6g})"


def origin_state(weights: DecoderWeights, tree: int) -> PathState:
    """Empty path: ``g = 0`` and all carries zero."""
    m, n, p = weights.ymat.shape
    return PathState(bits=(), tree=tree, g=0.0,
                     u=np.zeros((m, p), dtype=complex), v=np.zeros((m, n)))


def g_extend(state: PathState, next_bit: int, weights: DecoderWeights) -> PathState:
    """Append one bit and update ``g``, ``u`` and ``v``.

    The increment is ``A_l - b_l * sum_k Re(y_k[l] . D_k u_k)`` where ``A_l``
    is the level constant and the ``u`` carries are updated first.
    """
    if next_bit not in (-1, 1):
        raise ValueError("bits must be +1 or -1")
    m = state.level
    n = weights.ymat.shape[1]
    if m >= n:
        raise ValueError("path is already complete")
    t = state.tree
    ymat = weights.ymat
    u = state.u.copy()
    if m > 0:
        u += 0.5 * state.bits[-1] * ymat[:, m - 1, :].conj()
    u += 0.5 * next_bit * ymat[:, m, :].conj()
    corr = np.einsum("ki,kij,kj->", ymat[:, m, :], weights.delta[t], u).real
    g = state.g + weights.level_alpha[m] - next_bit * corr
    v = state.v + next_bit * weights.w_blocks[t, :, m, :]
    return PathState(bits=state.bits + (next_bit,), tree=t, g=float(g), u=u, v=v)


def heuristic_h2(state: PathState, weights: DecoderWeights) -> float:
    """Look-ahead bound ``sum_{m>l} A_m - sum_k sum_{m>l} |v_km| - sum_k beta_kl``."""
    ell = state.level
    return float(weights.h2_offset[state.tree, ell] - np.abs(state.v[:, ell:]).sum())


class SearchStack:
    """Binary heap keyed on ``(f, -level, ordinal)``.

    Smallest ``f`` first; on ties the deeper path, then the earlier push.
    """

    def __init__(self, cap: int = DEFAULT_STACK_CAP):
        if cap < 1:
            raise ValueError("stack capacity must be positive")
        self.cap = cap
        self._heap: list = []
        self._next = 0

    def __len__(self):
        return len(self._heap)

    def push(self, state: PathState) -> None:
        state.ordinal = self._next
        self._next += 1
        heapq.heappush(self._heap, (state.f, -state.level, state.ordinal, state))

    def pop(self) -> PathState:
        return heapq.heappop(self._heap)[-1]

    @property
    def overflowed(self) -> bool:
        return len(self._heap) > self.cap


@dataclass
class DecodeResult:
    """Outcome of one search.

    ``index`` is ``-1`` and ``codeword`` is ``None`` when the search was
    erased by stack overflow. ``expansions`` counts successor evaluations,
    one per popped partial path plus one for the origin. ``branches`` counts
    the successor paths whose metric was computed during those evaluations.
    """

    codeword: Codeword | None
    index: int
    expansions: int
    erased: bool = False
    branches: int = 0
    g: float = float("nan")
    metric: float = float("nan")
    trace: list = field(default_factory=list, repr=False)


def _hits(lo: int, hi: int, delta: int, per_tree: int) -> bool:
    if hi <= lo:
        return False
    i0 = -(-lo // delta)
    return i0 < per_tree and i0 * delta < hi


def _search_python(spec: CodeSpec, weights: DecoderWeights, use_h2: bool, cap: int,
                   trace: list | None) -> DecodeResult:
    n = spec.n
    stack = SearchStack(cap)
    expansions = 1  # the origin
    branches = 0

    def finish(child: PathState) -> None:
        nonlocal branches
        branches += 1
        child.h = heuristic_h2(child, weights) if use_h2 else 0.0
        stack.push(child)

    for t, counter in enumerate(spec.counters):
        child = g_extend(origin_state(weights, t), -1, weights)
        child.counter_state = counter.root()
        child.rho, child.count = 0, counter.count(child.counter_state)
        if _hits(0, child.count, spec.deltas[t], spec.per_tree):
            finish(child)

    while len(stack):
        if stack.overflowed:
            return DecodeResult(None, -1, expansions, erased=True, branches=branches,
                        trace=trace if trace is not None else [])
        node = stack.pop()
        if trace is not None:
            trace.append((node.ordinal, node.level, node.tree, node.f, node.g, node.h))
        if node.level == n:
            index = node.tree * spec.per_tree + node.rho // spec.deltas[node.tree]
            return DecodeResult(Codeword(node.bits, node.tree), index, expansions,
                                branches=branches, g=node.g, metric=weights.ml_from_g(node.g),
                                trace=trace if trace is not None else [])
        expansions += 1
        counter = spec.counters[node.tree]
        lower = counter.extend(node.counter_state, -1)
        gamma = counter.count(lower)
        options = ((-1, lower, node.rho, node.rho + gamma),
                   (1, counter.extend(node.counter_state, 1), node.rho + gamma,
                    node.rho + node.count))
        for bit, cstate, lo, hi in options:
            if not _hits(lo, hi, spec.deltas[node.tree], spec.per_tree):
                continue
            child = g_extend(node, bit, weights)
            child.counter_state, child.rho, child.count = cstate, lo, hi - lo
            finish(child)
    return DecodeResult(None, -1, expansions, erased=True, branches=branches,
                        trace=trace if trace is not None else [])


def _kernel_tables(spec: CodeSpec):
    cached = spec.__dict__.get("_kernel_tables")
    if cached is None:
        tabs = [c.kernel_tables() for c in spec.counters]
        pair_block = np.stack([t[0] for t in tabs])
        end_pair = np.stack([t[1] for t in tabs])
        cvec = np.stack([t[2] for t in tabs])
        after = np.stack([t[3] for t in tabs])
        binom = np.zeros((spec.n + 1, spec.n + 1), dtype=np.int64)
        for r in range(spec.n + 1):
            for x in range(r + 1):
                binom[r, x] = comb(r, x)
        cached = (pair_block, end_pair, cvec, after, binom,
                  np.array(spec.deltas, dtype=np.int64))
        spec.__dict__["_kernel_tables"] = cached
    return cached


def _search_numba(spec: CodeSpec, weights: DecoderWeights, use_h2: bool, cap: int) -> DecodeResult:
    from ._kernel import STATUS_OK, priority_search

    pair_block, end_pair, cvec, after, binom, deltas = _kernel_tables(spec)
    status, tree, rho, expansions, branches, g, bits = priority_search(
        weights.level_alpha, weights.w, weights.w_blocks, weights.h2_offset, use_h2,
        pair_block, end_pair, cvec, after, binom, deltas, spec.per_tree, cap)
    if status != STATUS_OK:
        return DecodeResult(None, -1, int(expansions), erased=True, branches=int(branches))
    tree, rho = int(tree), int(rho)
    index = tree * spec.per_tree + rho // spec.deltas[tree]
    return DecodeResult(Codeword(tuple(int(b) for b in bits), tree), index, int(expansions),
                        branches=int(branches), g=float(g), metric=weights.ml_from_g(float(g)))


def _resolve_backend(spec: CodeSpec, backend: str, tracing: bool) -> str:
    if backend not in ("auto", "python", "numba"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "auto":
        return "numba" if spec.p == 2 and not tracing else "python"
    if backend == "numba":
        if spec.p != 2:
            raise ValueError("the compiled search supports P = 2 only")
        if tracing:
            raise ValueError("tracing requires the python backend")
    return backend


def _run(y, spec: CodeSpec, heuristic: str, cap: int, backend: str,
         trace: list | None, weights: DecoderWeights | None) -> DecodeResult:
    if heuristic not in HEURISTICS:
        raise ValueError(f"heuristic must be one of {HEURISTICS}, got {heuristic!r}")
    if cap < 1:
        raise ValueError("stack capacity must be positive")
    if weights is None:
        weights = compute_weights(y, spec)
    use_h2 = heuristic == "h2"
    if _resolve_backend(spec, backend, trace is not None) == "numba":
        return _search_numba(spec, weights, use_h2, cap)
    return _search_python(spec, weights, use_h2, cap, trace)


def decode_priority(y, spec: CodeSpec, heuristic: str = "h2", cap: int = DEFAULT_STACK_CAP,
                    *, backend: str = "auto", trace: list | None = None,
                    weights: DecoderWeights | None = None) -> DecodeResult:
    """Decode ``y`` with the priority-first search.

    Parameters
    ----------
    y : array_like of complex
        Received samples (length ``L``, or ``MQ`` zero-padded for sub-block codes).
    spec : CodeSpec
        The code. Sub-block codes are routed to :func:`decode_priority_fast`.
    heuristic : {"h1", "h2"}
        ``"h1"`` is the zero heuristic (on-the-fly decoding); ``"h2"`` is the
        look-ahead bound that needs the whole received vector.
    cap : int
        Stack capacity. Exceeding it erases the trial.
    backend : {"auto", "python", "numba"}
        ``"auto"`` uses the compiled search for ``P = 2`` when not tracing.
    trace : list, optional
        If given, one ``(ordinal, level, tree, f, g, h)`` tuple is appended per
        popped path.
    """
    if spec.q is not None:
        return decode_priority_fast(y, spec, heuristic, cap, backend=backend, trace=trace,
                                    weights=weights)
    return _run(y, spec, heuristic, cap, backend, trace, weights)


def decode_priority_fast(y, spec: CodeSpec, heuristic: str = "h2",
                         cap: int = DEFAULT_STACK_CAP, *, backend: str = "auto",
                         trace: list | None = None,
                         weights: DecoderWeights | None = None) -> DecodeResult:
    """Priority-first search for codes designed for sub-block fading.

    Each sub-block keeps its own ``u`` and ``v`` carries. A bit whose delayed
    copy crosses a sub-block boundary contributes to both blocks, which is the
    boundary case of the per-block recursion.
    """
    if spec.q is None:
        raise ValueError("spec has no sub-block period; use decode_priority")
    return _run(y, spec, heuristic, cap, backend, trace, weights)


def write_trace(rows: Iterable[tuple], stream: TextIO) -> None:
    """Write trace rows as CSV with header ``ordinal,level,tree,f,g,h``."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for ordinal, level, tree, f, g, h in rows:
        writer.writerow([ordinal, level, tree, f"{f:.12g}", f"{g:.12g}", f"{h:.12g}"])
