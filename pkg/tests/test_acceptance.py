"""Acceptance criteria, each run at its stated tolerance and time budget.

Every test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
terminal summary. The Monte-Carlo criteria (7 and 8) take several minutes on
one core; results are shared between them through a module-level cache.
"""

import json
import math
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from socodes.channel import ChannelBlock, sigma_for_snr, transmit
from socodes.codebook import (_a_count, admissible_offdiagonals, codeword_index,
                              count_suffixes_blocks, count_suffixes_p2, count_table_general,
                              encode, enumerate_codebook, make_spec, make_target, verify_gram)
from socodes.decoder import (batch_g, compute_weights, decode_exhaustive, decode_priority,
                             exhaustive_metrics, g_extend, heuristic_h2, ml_metric,
                             origin_state, outer_product_metric, trace_metric)
from socodes.harness import ExperimentConfig, run_experiment
from socodes.oracles import all_prefixes, enumerate_prefix_counts

DATA = Path(__file__).parent / "data"
MC_TRIALS = 10_000


@lru_cache(maxsize=None)
def mc_point(n, k, mode, snr, heuristic, q=None, q_chan=None, trials=MC_TRIALS, seed=2024):
    cfg = ExperimentConfig(n=n, k=k, q=q, mode=mode, snrs=(snr,), trials=trials, seed=seed,
                           decoder=heuristic, q_chan=q_chan)
    return run_experiment(cfg).points[0]


def test_criterion_1_a_tables(report):
    frozen = json.loads((DATA / "a_tables_p3.json").read_text())
    _a_count.cache_clear()
    start = time.perf_counter()
    bad, cells = [], 0
    for key, grid in frozen.items():
        k, tail = key.split("|")
        k, tail = int(k), tuple(int(x) for x in tail.split(","))
        for a, q1 in enumerate(range(-k, k + 1)):
            for b, q2 in enumerate(range(-k, k + 1)):
                cells += 1
                if count_table_general(3, k, (q1, q2), tail) != grid[a][b]:
                    bad.append((k, tail, q1, q2))
    elapsed = time.perf_counter() - start
    spot = (count_table_general(3, 5, (-1, -1), (-1, -1)),
            count_table_general(3, 5, (1, -1), (-1, -1)),
            count_table_general(3, 4, (0, -4), (-1, -1)))
    report("criterion 1 (A_k tables, P=3, k=1..5)",
           not bad and spot == (4, 3, 1) and elapsed < 1.0,
           f"{cells} cells, {len(bad)} mismatches, spot cells {spot}, {elapsed:.3f} s")


def test_criterion_2_counting_oracle(report):
    start = time.perf_counter()
    checked, bad = 0, []
    for n in range(2, 13):
        for (c,) in admissible_offdiagonals(n, 2):
            ref = enumerate_prefix_counts(n, 2, (c,))
            target = make_target(n, 2, None, (c,))
            for prefix in all_prefixes(n):
                checked += 1
                if count_suffixes_p2(n, target, prefix) != ref[prefix]:
                    bad.append((n, c, prefix))
    for n, q in ((12, 7), (12, 5)):
        for c in admissible_offdiagonals(n, 2, q):
            ref = enumerate_prefix_counts(n, 2, c, q)
            target = make_target(n, 2, q, c)
            for prefix in all_prefixes(n):
                checked += 1
                if count_suffixes_blocks(n, q, target, prefix) != ref[prefix]:
                    bad.append((n, q, c, prefix))
    elapsed = time.perf_counter() - start
    report("criterion 2 (prefix counts vs enumeration)", not bad and elapsed < 60,
           f"{checked} prefixes, {len(bad)} mismatches, {elapsed:.1f} s")


def test_criterion_3_encoder_validity(report):
    start = time.perf_counter()
    problems = []
    for n, k in ((10, 5), (12, 6), (22, 11)):
        spec = make_spec(n, k)
        seen = set()
        for i in range(2 ** k):
            word = encode(spec, i)
            seen.add(word.bits)
            if not spec.targets[word.tree].matches([verify_gram(word, 2)]):
                problems.append((n, k, i, "gram"))
            if codeword_index(spec, word) != i:
                problems.append((n, k, i, "roundtrip"))
        if len(seen) != 2 ** k:
            problems.append((n, k, "duplicates"))
    elapsed = time.perf_counter() - start
    report("criterion 3 (encoder validity)", not problems and elapsed < 10,
           f"(10,5) (12,6) (22,11): {len(problems)} problems, {elapsed:.1f} s")


def test_criterion_4_ml_oracle_equivalence(report):
    start = time.perf_counter()
    stats = []
    ok = True
    for n, k, q in ((10, 5, None), (12, 6, None), (12, 6, 7)):
        spec = make_spec(n, k, q=q, mode="double")
        book = enumerate_codebook(spec)
        for snr in (5.0, 10.0):
            rng = np.random.default_rng([n, k, int(snr)])
            sigma = sigma_for_snr(n, 2, snr)
            agree = 0
            for _ in range(2000):
                word = book.bits[rng.integers(len(book))]
                y = transmit(word, ChannelBlock.draw(2, spec.length, rng, period=q), sigma, rng)
                ref = decode_exhaustive(y, book).index
                w = compute_weights(y, spec)
                agree += all(decode_priority(y, spec, h, weights=w).index == ref
                             for h in ("h1", "h2"))
            ok &= agree == 2000
            stats.append(f"({n},{k}{'' if q is None else f';Q={q}'})@{snr:g}dB {agree}/2000")
    elapsed = time.perf_counter() - start
    report("criterion 4 (search = exhaustive ML)", ok and elapsed < 300,
           ", ".join(stats) + f", {elapsed:.0f} s")


def test_criterion_5_admissibility(report):
    start = time.perf_counter()
    spec = make_spec(8, 4)
    book = enumerate_codebook(spec)
    rng = np.random.default_rng(55)
    sigma = sigma_for_snr(8, 2, 5.0)
    checked, violations = 0, 0
    for _ in range(200):
        word = book.bits[rng.integers(len(book))]
        y = transmit(word, ChannelBlock.draw(2, spec.length, rng), sigma, rng)
        w = compute_weights(y, spec)
        full = [batch_g(w, book.bits[i], book.trees[i]) for i in range(len(book))]
        for i in range(len(book)):
            tree, bits = int(book.trees[i]), tuple(int(b) for b in book.bits[i])
            st = origin_state(w, tree)
            for ell in range(1, spec.n + 1):
                st = g_extend(st, bits[ell - 1], w)
                best = min(full[j] for j in range(len(book)) if book.trees[j] == tree
                           and tuple(book.bits[j][:ell]) == bits[:ell])
                f1, f2 = st.g, st.g + heuristic_h2(st, w)
                checked += 1
                violations += (f1 > best + 1e-9) + (f2 > best + 1e-9)
    elapsed = time.perf_counter() - start
    report("criterion 5 (f1, f2 admissible on (8,4))", violations == 0 and elapsed < 60,
           f"{checked} prefix evaluations, {violations} violations, {elapsed:.1f} s")


def _rel_close(a, b, tol=1e-9):
    scale = np.maximum(np.abs(a), np.abs(b)).max()
    return np.all(np.abs(a - b) <= tol * max(scale, 1.0))


def _same_ranking(a, b, tol=1e-9):
    order = np.argsort(a, kind="stable")
    return np.all(np.diff(b[order]) >= -tol * max(np.abs(b).max(), 1.0))


def test_criterion_6_metric_identities(report):
    rng = np.random.default_rng(66)
    specs = [make_spec(10, 5), make_spec(12, 6, q=7)]
    books = [enumerate_codebook(s) for s in specs]
    fails = {"a": 0, "b": 0, "c": 0}
    for inst in range(100):
        spec, book = specs[inst % 2], books[inst % 2]
        y = transmit(book.bits[rng.integers(len(book))],
                     ChannelBlock.draw(2, spec.length, rng, period=spec.q),
                     sigma_for_snr(spec.n, 2, 5.0), rng)
        ml = np.array([ml_metric(y, b, 2, spec.q) for b in book.bits])
        tr = np.array([trace_metric(y, b, 2, spec.q) for b in book.bits])
        op = np.array([outer_product_metric(y, b, 2, spec.q) for b in book.bits])
        op_ml = (op - (op - 2 * ml).mean()) / 2
        fails["a"] += not (_rel_close(ml, tr) and _rel_close(ml, op_ml)
                           and _same_ranking(ml, tr) and _same_ranking(ml, op)
                           and _rel_close(ml, exhaustive_metrics(y, book)))
        w = compute_weights(y, spec)
        for i in range(len(book)):
            st = origin_state(w, int(book.trees[i]))
            for bit in book.bits[i]:
                nxt = g_extend(st, int(bit), w)
                fails["c"] += nxt.g < st.g - 1e-12
                st = nxt
            ref = batch_g(w, book.bits[i], int(book.trees[i]))
            fails["b"] += not math.isclose(st.g, ref, rel_tol=1e-9, abs_tol=1e-12)
    report("criterion 6 (metric identities)", not any(fails.values()),
           f"failures (a) {fails['a']}/100, (b) {fails['b']}, (c) {fails['c']}")


def test_criterion_7_table1_complexity(report):
    start = time.perf_counter()
    d_h1 = mc_point(22, 11, "double", 10.0, "h1").mean_expansions_per_info_bit
    d_h2 = mc_point(22, 11, "double", 10.0, "h2").mean_expansions_per_info_bit
    s_h2 = mc_point(22, 11, "single", 10.0, "h2").mean_expansions_per_info_bit
    ratio = (mc_point(22, 11, "double", 15.0, "h1").mean_expansions_per_info_bit
             / mc_point(22, 11, "double", 15.0, "h2").mean_expansions_per_info_bit)
    checks = [160 <= d_h1 <= 480, 10 <= d_h2 <= 30, 6 <= s_h2 <= 18, ratio >= 10]
    elapsed = time.perf_counter() - start
    report("criterion 7 (expansions per info bit, 22-bit codes)",
           all(checks) and elapsed < 1800,
           f"Double f1 {d_h1:.1f} (320), Double f2 {d_h2:.1f} (20), "
           f"Single f2 {s_h2:.1f} (12), f1/f2 at 15 dB {ratio:.1f} (>=10), {elapsed:.0f} s")


def test_criterion_8_behavioral_curves(report):
    grid = (5.0, 7.5, 10.0, 12.5, 15.0)
    wers = [mc_point(22, 11, "double", s, "h2").wer for s in grid]
    decreasing = all(a > b for a, b in zip(wers, wers[1:]))
    single = mc_point(22, 11, "single", 10.0, "h2").wer
    double = mc_point(22, 11, "double", 10.0, "h2").wer
    noiseless = [mc_point(22, 11, m, math.inf, "h2", trials=2000).wer for m in ("single", "double")]
    noiseless.append(mc_point(28, 14, "double", math.inf, "h2", q=15, trials=500).wer)
    matched = mc_point(28, 14, "double", 10.0, "h2", q=15, trials=2000).wer
    mismatched = mc_point(28, 14, "double", 10.0, "h2", q_chan=15, trials=2000).wer
    checks = [decreasing, single >= double, all(x == 0 for x in noiseless), mismatched > matched]
    report("criterion 8 (behavioral curves)", all(checks),
           "Double-22 WER " + " > ".join(f"{w:.4f}" for w in wers)
           + f"; Single {single:.4f} vs Double {double:.4f} at 10 dB"
           + f"; noiseless WER {max(noiseless):g}"
           + f"; Double-28 on Q_chan=15 {mismatched:.3f} vs Double-28(Q=15) {matched:.3f}")
