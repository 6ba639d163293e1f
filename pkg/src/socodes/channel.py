"""Block-fading transmission model ``y = B h + n``.

A codeword of length ``N`` is sent over a ``P``-tap channel and produces
``L = N + P - 1`` received samples. Taps are either constant for the whole
block (quasi-static) or redrawn every ``Q`` samples (sub-block fading). In the
latter case the model is the direct sum of the per-sub-block systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelBlock",
    "average_snr",
    "block_ranges",
    "complex_gaussian",
    "conv_matrix",
    "block_conv_matrices",
    "ls_estimate",
    "num_blocks",
    "projection_matrix",
    "sigma_for_snr",
    "transmit",
]


def num_blocks(n: int, p: int, q: int | None = None) -> int:
    """Number of sub-blocks ``M = ceil(L / Q)`` (1 when ``q`` is None)."""
    if q is None:
        return 1
    if q < 1:
        raise ValueError(f"sub-block period must be positive, got {q}")
    return -(-(n + p - 1) // q)


def block_ranges(n: int, p: int, q: int | None = None) -> list[tuple[int, int]]:
    """Half-open 0-based sample ranges of each sub-block, clipped to ``L``."""
    length = n + p - 1
    if q is None:
        return [(0, length)]
    return [(k * q, min((k + 1) * q, length)) for k in range(num_blocks(n, p, q))]


def _bits_array(codeword) -> np.ndarray:
    bits = getattr(codeword, "bits", codeword)
    arr = np.asarray(bits, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("codeword must be a non-empty 1-D sequence")
    if not np.all(np.abs(arr) == 1):
        raise ValueError("codeword entries must be +1 or -1")
    return arr


def _full_conv(bits: np.ndarray, p: int, rows: int) -> np.ndarray:
    n = bits.size
    B = np.zeros((rows, p), dtype=np.int64)
    for j in range(p):
        B[j:j + n, j] = bits
    return B


def conv_matrix(codeword, p: int, q: int | None = None) -> np.ndarray:
    """Convolution matrix of a codeword.

    Quasi-static: the ``L x P`` banded matrix whose column ``j`` is the
    codeword delayed by ``j``. Sub-block fading: the ``MQ x MP`` block
    diagonal direct sum of the ``Q x P`` sub-block matrices, with rows past
    ``L`` left at zero.
    """
    bits = _bits_array(codeword)
    n = bits.size
    if q is None:
        return _full_conv(bits, p, n + p - 1)
    m = num_blocks(n, p, q)
    full = _full_conv(bits, p, max(m * q, n + p - 1))
    B = np.zeros((m * q, m * p), dtype=np.int64)
    for k in range(m):
        B[k * q:(k + 1) * q, k * p:(k + 1) * p] = full[k * q:(k + 1) * q]
    return B


def block_conv_matrices(codeword, p: int, q: int | None = None) -> list[np.ndarray]:
    """Per-sub-block convolution matrices ``B_k`` (rows clipped to ``L``)."""
    bits = _bits_array(codeword)
    full = _full_conv(bits, p, bits.size + p - 1)
    return [full[a:b] for a, b in block_ranges(bits.size, p, q)]


def projection_matrix(B: np.ndarray) -> np.ndarray:
    """Orthogonal projector ``B (B^T B)^+ B^T`` onto the column space of ``B``."""
    B = np.asarray(B, dtype=float)
    return B @ np.linalg.pinv(B.T @ B) @ B.T


def complex_gaussian(rng: np.random.Generator, size, variance: float) -> np.ndarray:
    """Circular complex Gaussian samples with ``E|z|^2 = variance``."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


@dataclass(frozen=True)
class ChannelBlock:
    """Channel taps for one transmission.

    ``taps`` has shape ``(n_periods, P)``; row ``k`` is active for samples
    ``k*period .. (k+1)*period - 1``. ``period=None`` means the first row is
    used for every sample (quasi-static).
    """

    taps: np.ndarray
    period: int | None = None

    @property
    def p(self) -> int:
        return self.taps.shape[1]

    @classmethod
    def draw(cls, p: int, length: int, rng: np.random.Generator,
             period: int | None = None) -> "ChannelBlock":
        """Draw i.i.d. taps with per-tap variance ``1/P``."""
        if period is not None and period >= length:
            period = None
        n_periods = 1 if period is None else -(-length // period)
        taps = complex_gaussian(rng, (n_periods, p), 1.0 / p)
        return cls(taps=taps, period=period)

    def per_sample(self, length: int) -> np.ndarray:
        """``(length, P)`` array with the taps in force at each sample."""
        if self.period is None:
            return np.broadcast_to(self.taps[0], (length, self.p))
        idx = np.arange(length) // self.period
        if idx[-1] >= self.taps.shape[0]:
            raise ValueError("channel has too few tap sets for this block length")
        return self.taps[idx]


def transmit(codeword, channel: ChannelBlock, sigma_n: float,
             rng: np.random.Generator | None = None) -> np.ndarray:
    """Received samples ``y = B h + n`` (length ``L``).

    The coefficient set changes every ``channel.period`` samples, independent
    of any sub-block structure the code was designed for.
    """
    if sigma_n < 0:
        raise ValueError("sigma_n must be non-negative")
    bits = _bits_array(codeword)
    length = bits.size + channel.p - 1
    B = _full_conv(bits, channel.p, length)
    y = np.sum(B * channel.per_sample(length), axis=1).astype(complex)
    if sigma_n > 0:
        if rng is None:
            raise ValueError("an rng is required when sigma_n > 0")
        y = y + complex_gaussian(rng, length, sigma_n ** 2)
    return y


def ls_estimate(B: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least-squares channel estimate ``(B^T B)^{-1} B^T y``."""
    B = np.asarray(B, dtype=float)
    y = np.asarray(y)
    if B.shape[0] != y.shape[0]:
        raise ValueError(f"B has {B.shape[0]} rows but y has {y.shape[0]} samples")
    gram = B.T @ B
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise np.linalg.LinAlgError("B^T B is singular; channel is not identifiable")
    return np.linalg.solve(gram, B.T @ y)


def _snr_linear(snr_db: float) -> float:
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    return 10.0 ** (snr_db / 10.0)


def sigma_for_snr(n: int, p: int, snr_db: float, convention: str = "average") -> float:
    """Noise standard deviation giving the requested SNR.

    ``convention="average"`` uses ``SNR = N / ((N + P - 1) sigma^2)``, which
    accounts for the muted guard samples; ``"asymptotic"`` uses
    ``SNR = 1 / sigma^2``.
    """
    snr = _snr_linear(snr_db)
    if convention == "average":
        var = n / ((n + p - 1) * snr)
    elif convention == "asymptotic":
        var = 1.0 / snr
    else:
        raise ValueError(f"unknown SNR convention {convention!r}")
    return math.sqrt(var)


def average_snr(n: int, p: int, sigma_n: float, convention: str = "average") -> float:
    """Inverse of :func:`sigma_for_snr`; returns the SNR in dB."""
    if sigma_n <= 0:
        raise ValueError("sigma_n must be positive")
    if convention == "average":
        snr = n / ((n + p - 1) * sigma_n ** 2)
    elif convention == "asymptotic":
        snr = 1.0 / sigma_n ** 2
    else:
        raise ValueError(f"unknown SNR convention {convention!r}")
    return 10.0 * math.log10(snr)
