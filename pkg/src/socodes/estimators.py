"""scikit-learn style wrappers around the encoder and decoders.

>>> from socodes.estimators import SelfOrthogonalCode
>>> code = SelfOrthogonalCode(n=10, k=5).fit()
>>> code.transform([0, 31]).shape
(2, 10)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .codebook import codeword_index, encode, enumerate_codebook, make_spec
from .decoder import DEFAULT_STACK_CAP, decode_exhaustive, decode_priority

__all__ = ["SelfOrthogonalCode", "PriorityFirstDecoder", "ExhaustiveDecoder",
           "check_indices", "check_received"]


def check_indices(X, k: int) -> np.ndarray:
    """Validate information indices; returns a 1-D ``int64`` array."""
    arr = check_array(np.asarray(X).reshape(-1, 1), dtype=np.int64, ensure_2d=True)
    arr = arr.ravel()
    if np.any(arr < 0) or np.any(arr >= 2 ** k):
        raise ValueError(f"indices must lie in 0..{2 ** k - 1}")
    return arr


def check_received(Y, length: int) -> np.ndarray:
    """Validate a batch of received vectors; returns ``(n_samples, length)`` complex.

    ``check_array`` rejects complex input, so shape and finiteness are checked here.
    """
    arr = np.asarray(Y, dtype=complex)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array of received vectors, got shape {arr.shape}")
    if arr.shape[1] < length:
        raise ValueError(f"each received vector needs {length} samples, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("received samples must be finite")
    return arr


class _CodeParams(BaseEstimator):
    def __init__(self, n=10, k=5, p=2, q=None, mode=None):
        self.n = n
        self.k = k
        self.p = p
        self.q = q
        self.mode = mode

    def _build(self):
        self.spec_ = make_spec(self.n, self.k, self.p, self.q, self.mode)
        self.n_codewords_ = 2 ** self.spec_.k
        return self


class SelfOrthogonalCode(TransformerMixin, _CodeParams):
    """Encoder: information index to ``±1`` codeword.

    Parameters
    ----------
    n, k : int
        Codeword length and information bits.
    p : int, default=2
        Channel taps.
    q : int or None
        Sub-block period the code is designed for.
    mode : {"single", "double"} or None
        Number of code trees.
    """

    def fit(self, X=None, y=None):
        return self._build()

    def transform(self, X):
        check_is_fitted(self, "spec_")
        idx = check_indices(X, self.spec_.k)
        out = np.empty((idx.size, self.spec_.n), dtype=np.int8)
        for row, i in enumerate(idx):
            out[row] = encode(self.spec_, int(i)).bits
        return out

    def inverse_transform(self, X):
        check_is_fitted(self, "spec_")
        words = check_array(X, dtype=np.int64)
        return np.array([codeword_index(self.spec_, w) for w in words], dtype=np.int64)


class PriorityFirstDecoder(_CodeParams):
    """Priority-first ML search; ``predict`` returns information indices.

    Erased trials (stack overflow) are reported as ``-1``. After ``predict``
    the per-sample expansion counts are in ``expansions_``.
    """

    def __init__(self, n=10, k=5, p=2, q=None, mode=None, heuristic="h2",
                 stack_cap=DEFAULT_STACK_CAP, backend="auto"):
        super().__init__(n=n, k=k, p=p, q=q, mode=mode)
        self.heuristic = heuristic
        self.stack_cap = stack_cap
        self.backend = backend

    def fit(self, X=None, y=None):
        if self.heuristic not in ("h1", "h2"):
            raise ValueError(f"heuristic must be 'h1' or 'h2', got {self.heuristic!r}")
        return self._build()

    def predict(self, Y):
        check_is_fitted(self, "spec_")
        Y = check_received(Y, self.spec_.length)
        out = np.empty(Y.shape[0], dtype=np.int64)
        exps = np.empty(Y.shape[0], dtype=np.int64)
        for row, y in enumerate(Y):
            res = decode_priority(y, self.spec_, self.heuristic, self.stack_cap,
                                  backend=self.backend)
            out[row], exps[row] = res.index, res.expansions
        self.expansions_ = exps
        return out

    def score(self, Y, indices):
        """Fraction of received vectors decoded to the given index (``1 - WER``)."""
        return float(np.mean(self.predict(Y) == check_indices(indices, self.spec_.k)))


class ExhaustiveDecoder(_CodeParams):
    """Exhaustive ML decoding against the enumerated codebook."""

    def fit(self, X=None, y=None):
        self._build()
        self.codebook_ = enumerate_codebook(self.spec_)
        return self

    def predict(self, Y):
        check_is_fitted(self, "codebook_")
        Y = check_received(Y, self.spec_.length)
        return np.array([decode_exhaustive(y, self.codebook_).index for y in Y], dtype=np.int64)

    def score(self, Y, indices):
        return float(np.mean(self.predict(Y) == check_indices(indices, self.spec_.k)))
