"""Exhaustive maximum-likelihood decoding over a full codebook.

Serves as the oracle for the tree search. The metric is the projection
residual ``sum_k ||y_k - P_{B_k} y_k||^2`` computed from each codeword's own
convolution matrices, with no use of the tree structure or the weight
recursions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import block_conv_matrices, block_ranges
from ..codebook import Codebook, Codeword

__all__ = [
    "ExhaustiveResult",
    "decode_exhaustive",
    "exhaustive_metrics",
    "ml_metric",
    "trace_metric",
    "outer_product_metric",
    "projection_blocks",
]


def projection_blocks(codeword, p: int, q: int | None, length: int) -> list[np.ndarray]:
    """``L x L`` projectors, one per sub-block, each supported on its own rows."""
    out = []
    bits = getattr(codeword, "bits", codeword)
    for (a, b), B in zip(block_ranges(len(bits), p, q), block_conv_matrices(bits, p, q)):
        B = B.astype(float)
        proj = np.zeros((length, length))
        proj[a:b, a:b] = B @ np.linalg.pinv(B.T @ B) @ B.T
        out.append(proj)
    return out


def ml_metric(y: np.ndarray, codeword, p: int, q: int | None = None) -> float:
    """``||y - P_B y||^2`` with ``P_B`` the direct sum of block projectors."""
    y = np.asarray(y, dtype=complex)
    proj = sum(projection_blocks(codeword, p, q, y.size))
    r = y - proj @ y
    return float(np.vdot(r, r).real)


def trace_metric(y: np.ndarray, codeword, p: int, q: int | None = None) -> float:
    """``||y||^2 - tr(P_B y y^H)``."""
    y = np.asarray(y, dtype=complex)
    proj = sum(projection_blocks(codeword, p, q, y.size))
    return float(np.vdot(y, y).real - np.trace(proj @ np.outer(y, y.conj())).real)


def outer_product_metric(y: np.ndarray, codeword, p: int, q: int | None = None) -> float:
    """``sum_k ||vec(y_k y_k^H) - vec(P_{B_k})||^2`` (outer-product demodulator form).

    Differs from :func:`ml_metric` by twice the metric plus a codeword-independent
    constant, so it ranks codewords identically.
    """
    y = np.asarray(y, dtype=complex)
    total = 0.0
    for (a, b), proj in zip(block_ranges(len(getattr(codeword, "bits", codeword)), p, q),
                            projection_blocks(codeword, p, q, y.size)):
        yk = np.zeros_like(y)
        yk[a:b] = y[a:b]
        diff = np.outer(yk, yk.conj()) - proj
        total += float(np.sum(np.abs(diff) ** 2))
    return total


def exhaustive_metrics(y, codebook: Codebook) -> np.ndarray:
    """Projection residual for every codeword, as a length-``2^K`` array."""
    spec = codebook.spec
    y = np.asarray(y, dtype=complex).ravel()
    if y.size > spec.length:
        if np.any(y[spec.length:] != 0):
            raise ValueError("samples beyond L = N + P - 1 must be zero")
        y = y[:spec.length]
    if y.size != spec.length:
        raise ValueError(f"received vector must have {spec.length} samples, got {y.size}")
    conv, dinv = codebook.oracle_tensors
    energy = float(np.vdot(y, y).real)
    proj_energy = np.zeros(len(codebook))
    for k, (a, b) in enumerate(block_ranges(spec.n, spec.p, spec.q)):
        bty = np.einsum("csi,s->ci", conv[:, a:b, :], y[a:b])
        proj_energy += np.einsum("ci,cij,cj->c", bty.conj(), dinv[:, k], bty).real
    return energy - proj_energy


@dataclass(frozen=True)
class ExhaustiveResult:
    codeword: Codeword
    index: int
    metric: float
    expansions: int


def decode_exhaustive(y, codebook: Codebook) -> ExhaustiveResult:
    """Codeword minimizing the projection residual; ties go to the smallest index.

    ``expansions`` reports the equivalent search effort: the number of
    internal nodes of the code tree(s), counting the origin once.
    """
    if len(codebook) == 0:
        raise ValueError("codebook is empty")
    metrics = exhaustive_metrics(y, codebook)
    idx = int(np.argmin(metrics))
    return ExhaustiveResult(codeword=codebook.codeword(idx), index=idx,
                            metric=float(metrics[idx]), expansions=codebook.tree_nodes)
