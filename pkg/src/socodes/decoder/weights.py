"""Per-received-vector quantities shared by every path of the search.

For tree ``theta`` and sub-block ``k`` the ML criterion is the quadratic form
``b^T W b`` with ``W = sum_k W_k`` and::

    W_k[m, n] = Re sum_ij D_k[i, j] y_k[m + i] conj(y_k[n + j])

where ``y_k`` is ``y`` with every sample outside sub-block ``k`` set to zero
and ``D_k`` is the (pseudo-)inverse of the block Gram target. Only the real
code bits ``b_1..b_N`` enter ``W_k``, so the bounds ``alpha`` and ``beta``
never charge for positions that carry no bit. With a single block these are
exactly the quasi-static quantities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import block_ranges
from ..codebook import CodeSpec

__all__ = ["DecoderWeights", "compute_weights", "block_deltas", "masked_ymat", "batch_g"]


def block_deltas(spec: CodeSpec) -> np.ndarray:
    """``(T, M, P, P)`` array of ``D = G^+`` for every tree and sub-block.

    A block Gram target is singular only when the last sub-block holds no
    sample of the undelayed codeword. Its Moore-Penrose inverse then zeroes
    the empty rows and columns and inverts the remaining principal block.
    """
    out = np.empty((spec.theta, spec.num_blocks, spec.p, spec.p))
    for t, target in enumerate(spec.targets):
        for k, g in enumerate(target.arrays()):
            out[t, k] = np.linalg.pinv(g.astype(float))
    return out


def _as_received(y, spec: CodeSpec) -> np.ndarray:
    y = np.asarray(y, dtype=complex).ravel()
    length = spec.length
    if y.size == length:
        return y
    padded = spec.num_blocks * spec.q if spec.q is not None else length
    if y.size == padded and y.size > length:
        if np.any(y[length:] != 0):
            raise ValueError("samples beyond L = N + P - 1 must be zero")
        return y[:length]
    raise ValueError(f"received vector must have {length} samples, got {y.size}")


def masked_ymat(y: np.ndarray, spec: CodeSpec) -> np.ndarray:
    """``(M, N, P)`` array with ``[k, m, i] = y[m + i]`` if that sample is in block ``k``."""
    n, p = spec.n, spec.p
    idx = np.arange(n)[:, None] + np.arange(p)[None, :]
    out = np.zeros((spec.num_blocks, n, p), dtype=complex)
    for k, (a, b) in enumerate(block_ranges(n, p, spec.q)):
        mask = (idx >= a) & (idx < b)
        out[k][mask] = y[idx[mask]]
    return out


@dataclass(frozen=True)
class DecoderWeights:
    """Weights, bounds and look-ahead offsets for one received vector.

    Attributes
    ----------
    y : ndarray
        Received samples, length ``L``.
    ymat : ndarray, shape (M, N, P)
        Sample ``y[m + i]`` restricted to sub-block ``k``.
    delta : ndarray, shape (T, M, P, P)
        Inverse block Gram targets.
    w_blocks : ndarray, shape (T, M, N, N)
        Per-block weight matrices ``W_k``.
    w : ndarray, shape (T, N, N)
        ``sum_k W_k``; the metric is ``b^T w[t] b``.
    alpha : ndarray, shape (T, M, N)
        ``sum_{n<m} |W_k[m, n]| + |W_k[m, m]| / 2``.
    level_alpha : ndarray, shape (N,)
        ``sum_k max_t alpha[t, k, m]``: the constant added at each level.
    beta : ndarray, shape (T, M, N + 1)
        Look-ahead bound on the unresolved part of each block form.
    h2_offset : ndarray, shape (T, N + 1)
        Path-independent part of ``h2`` at each level.
    """

    y: np.ndarray
    ymat: np.ndarray
    delta: np.ndarray
    w_blocks: np.ndarray
    w: np.ndarray
    alpha: np.ndarray
    level_alpha: np.ndarray
    beta: np.ndarray
    h2_offset: np.ndarray

    @property
    def energy(self) -> float:
        return float(np.vdot(self.y, self.y).real)

    @property
    def total_alpha(self) -> float:
        return float(self.level_alpha.sum())

    def ml_from_g(self, g: float) -> float:
        """Residual ``||y - P_B y||^2`` implied by a full-length path metric."""
        return self.energy + 2.0 * (g - self.total_alpha)


def _beta(w_blocks: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    t, m, n, _ = w_blocks.shape
    beta = np.empty((t, m, n + 1))
    beta[..., 0] = alpha.sum(axis=-1)
    absw = np.abs(w_blocks)
    for ell in range(1, n + 1):
        row = ell - 1
        beta[..., ell] = (beta[..., ell - 1] - absw[..., row, ell:].sum(axis=-1)
                          - 0.5 * absw[..., row, row])
    # exact zero at the end; the recursion only leaves rounding residue there
    beta[..., n] = 0.0
    return beta


def compute_weights(y, spec: CodeSpec) -> DecoderWeights:
    """Build :class:`DecoderWeights` for received vector ``y`` (length ``L`` or ``MQ``)."""
    y = _as_received(y, spec)
    ymat = masked_ymat(y, spec)
    delta = block_deltas(spec)
    w_blocks = np.einsum("kmi,tkij,knj->tkmn", ymat, delta, ymat.conj()).real
    w_blocks = 0.5 * (w_blocks + np.swapaxes(w_blocks, -1, -2))
    absw = np.abs(w_blocks)
    alpha = np.tril(absw, -1).sum(axis=-1) + 0.5 * np.diagonal(absw, axis1=-2, axis2=-1)
    level_alpha = alpha.max(axis=0).sum(axis=0)
    beta = _beta(w_blocks, alpha)
    tail_alpha = np.concatenate([np.cumsum(level_alpha[::-1])[::-1], [0.0]])
    h2_offset = tail_alpha[None, :] - beta.sum(axis=1)
    return DecoderWeights(y=y, ymat=ymat, delta=delta, w_blocks=w_blocks,
                          w=w_blocks.sum(axis=1), alpha=alpha, level_alpha=level_alpha,
                          beta=beta, h2_offset=h2_offset)


def batch_g(weights: DecoderWeights, bits, tree: int) -> float:
    """Path metric of a prefix evaluated directly from its definition.

    ``g(b_(l)) = sum_{m<=l} A_m - (1/2) sum_{m,n<=l} w_mn b_m b_n``.
    """
    b = np.asarray(bits, dtype=float)
    ell = b.size
    w = weights.w[tree, :ell, :ell]
    return float(weights.level_alpha[:ell].sum() - 0.5 * b @ w @ b)
