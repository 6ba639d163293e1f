"""Quick self-checks run by ``socodes verify``.

Each check compares a fast routine against an independent reference on
small instances. The full acceptance runs live in the test suite; these are
sized to finish in well under a minute.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import ChannelBlock, sigma_for_snr, transmit
from .codebook import (PairBlockCounter, admissible_offdiagonals, codeword_index,
                       count_suffixes_p2, count_table_general, encode, enumerate_codebook,
                       make_spec, make_target, verify_gram)
from .decoder import compute_weights, decode_exhaustive, decode_priority
from .oracles import all_prefixes, enumerate_a_table, enumerate_prefix_counts

__all__ = ["CheckResult", "CHECKS", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_a_tables() -> str:
    cells = 0
    for k in range(1, 6):
        for tail in ((-1, -1), (-1, 1)):
            ref = enumerate_a_table(3, k, tail)
            for q in itertools.product(range(-k, k + 1), repeat=2):
                if count_table_general(3, k, q, tail) != ref[q]:
                    raise AssertionError(f"A_{k}({q} | {tail}) mismatch")
                cells += 1
    return f"{cells} cells for P=3, k=1..5"


def _check_closed_form() -> str:
    checked = 0
    for n in range(2, 11):
        for (c,) in admissible_offdiagonals(n, 2):
            ref = enumerate_prefix_counts(n, 2, (c,))
            target = make_target(n, 2, None, (c,))
            for prefix in all_prefixes(n):
                if count_suffixes_p2(n, target, prefix) != ref[prefix]:
                    raise AssertionError(f"N={n}, c={c}, prefix {prefix}")
                checked += 1
    return f"{checked} prefixes, N=2..10"


def _check_subblock() -> str:
    checked = 0
    for n, q in ((10, 4), (10, 6)):
        for c in admissible_offdiagonals(n, 2, q):
            ref = enumerate_prefix_counts(n, 2, c, q)
            counter = PairBlockCounter(n, q, c)
            for prefix in all_prefixes(n):
                if counter.count(counter.state_of(prefix)) != ref[prefix]:
                    raise AssertionError(f"N={n}, Q={q}, c={c}, prefix {prefix}")
                checked += 1
    return f"{checked} prefixes"


def _check_encoder() -> str:
    for n, k, q in ((10, 5, None), (12, 6, None), (12, 6, 7)):
        spec = make_spec(n, k, q=q)
        seen = set()
        for i in range(2 ** k):
            word = encode(spec, i)
            grams = verify_gram(word, 2, q)
            if not spec.targets[word.tree].matches([grams] if q is None else grams):
                raise AssertionError(f"{spec}: index {i} misses its Gram target")
            if codeword_index(spec, word) != i:
                raise AssertionError(f"{spec}: index {i} does not round-trip")
            seen.add(word.bits)
        if len(seen) != 2 ** k:
            raise AssertionError(f"{spec}: duplicate codewords")
    return "(10,5), (12,6), (12,6;Q=7)"


def _check_decoder(trials: int = 100) -> str:
    for n, k, q in ((10, 5, None), (12, 6, 7)):
        spec = make_spec(n, k, q=q)
        book = enumerate_codebook(spec)
        sigma = sigma_for_snr(n, 2, 5.0)
        rng = np.random.default_rng(2024)
        for _ in range(trials):
            word = book.bits[rng.integers(len(book))]
            y = transmit(word, ChannelBlock.draw(2, spec.length, rng, period=q), sigma, rng)
            ref = decode_exhaustive(y, book).index
            weights = compute_weights(y, spec)
            for h in ("h1", "h2"):
                if decode_priority(y, spec, h, weights=weights).index != ref:
                    raise AssertionError(f"{spec}: {h} disagrees with exhaustive ML")
    return f"{trials} trials each for (10,5) and (12,6;Q=7) at 5 dB"


CHECKS: dict[str, Callable[[], str]] = {
    "a-tables": _check_a_tables,
    "prefix-counts": _check_closed_form,
    "subblock-counts": _check_subblock,
    "encoder": _check_encoder,
    "decoder-ml": _check_decoder,
}


def run_checks(names=None) -> list[CheckResult]:
    """Run the named checks (all by default)."""
    results = []
    for name in names or CHECKS:
        try:
            detail = CHECKS[name]()
            results.append(CheckResult(name, True, detail))
        except AssertionError as exc:
            results.append(CheckResult(name, False, str(exc)))
    return results
