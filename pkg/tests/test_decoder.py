import io

import numpy as np
import pytest

from socodes.channel import ChannelBlock, sigma_for_snr, transmit
from socodes.codebook import encode, enumerate_codebook, make_spec
from socodes.decoder import (batch_g, compute_weights, decode_exhaustive, decode_priority,
                             decode_priority_fast, exhaustive_metrics, g_extend, heuristic_h2,
                             ml_metric, origin_state, outer_product_metric, trace_metric,
                             write_trace)


def received(spec, book, rng, snr_db=5.0, period=None):
    index = int(rng.integers(len(book)))
    sigma = sigma_for_snr(spec.n, spec.p, snr_db)
    ch = ChannelBlock.draw(spec.p, spec.length, rng, period=period if period else spec.q)
    return index, transmit(book.bits[index], ch, sigma, rng)


@pytest.mark.parametrize("n,k,q", [(10, 5, None), (11, 5, None), (12, 6, 7), (12, 5, 5)])
@pytest.mark.parametrize("heuristic", ["h1", "h2"])
def test_priority_matches_exhaustive(n, k, q, heuristic):
    spec = make_spec(n, k, q=q)
    book = enumerate_codebook(spec)
    rng = np.random.default_rng(7)
    for _ in range(60):
        _, y = received(spec, book, rng, snr_db=3.0)
        res = decode_priority(y, spec, heuristic)
        ref = decode_exhaustive(y, book)
        assert not res.erased
        # short sub-blocks admit exact ties (equal column spaces); compare metrics then
        assert res.index == ref.index or res.metric == pytest.approx(ref.metric, rel=1e-9)


def test_p3_python_engine_matches_exhaustive():
    spec = make_spec(9, 4, p=3)
    book = enumerate_codebook(spec)
    rng = np.random.default_rng(3)
    for _ in range(40):
        _, y = received(spec, book, rng, snr_db=5.0)
        for h in ("h1", "h2"):
            assert decode_priority(y, spec, h).index == decode_exhaustive(y, book).index


@pytest.mark.parametrize("n,k,q", [(12, 6, None), (22, 11, None), (12, 6, 7)])
def test_kernel_and_python_engines_agree(n, k, q):
    spec = make_spec(n, k, q=q)
    rng = np.random.default_rng(11)
    sigma = sigma_for_snr(n, 2, 4.0)
    for _ in range(25):
        word = rng.choice([-1, 1], size=n)
        y = transmit(word, ChannelBlock.draw(2, spec.length, rng, period=q), sigma, rng)
        w = compute_weights(y, spec)
        for h in ("h1", "h2"):
            a = decode_priority(y, spec, h, backend="python", weights=w)
            b = decode_priority(y, spec, h, backend="numba", weights=w)
            assert (a.index, a.expansions, a.branches) == (b.index, b.expansions, b.branches)
            assert a.g == pytest.approx(b.g, rel=1e-9, abs=1e-9)


def test_decoded_metric_is_projection_residual(spec_10_5, book_10_5, rng):
    _, y = received(spec_10_5, book_10_5, rng)
    res = decode_priority(y, spec_10_5)
    assert res.metric == pytest.approx(ml_metric(y, res.codeword, 2), rel=1e-9)


def test_noiseless_decoding_is_exact(spec_10_5, book_10_5, rng):
    for index in range(len(book_10_5)):
        ch = ChannelBlock.draw(2, spec_10_5.length, rng)
        y = transmit(book_10_5.bits[index], ch, 0.0)
        assert decode_priority(y, spec_10_5).index == index
        assert decode_exhaustive(y, book_10_5).index == index


def test_metric_forms_rank_identically(book_10_5, rng):
    spec = book_10_5.spec
    _, y = received(spec, book_10_5, rng)
    ml = np.array([ml_metric(y, w, 2) for w in book_10_5.bits])
    tr = np.array([trace_metric(y, w, 2) for w in book_10_5.bits])
    op = np.array([outer_product_metric(y, w, 2) for w in book_10_5.bits])
    assert np.allclose(ml, tr)
    assert np.allclose(ml, exhaustive_metrics(y, book_10_5))
    # outer-product form is 2 * ml + constant
    assert np.allclose(op - 2 * ml, (op - 2 * ml)[0])


def test_subblock_metric_forms(spec_12_6_q7, rng):
    book = enumerate_codebook(spec_12_6_q7)
    _, y = received(spec_12_6_q7, book, rng)
    ml = np.array([ml_metric(y, w, 2, 7) for w in book.bits])
    assert np.allclose(ml, exhaustive_metrics(y, book))


def test_recursive_g_equals_batch_and_increments_nonnegative(spec_12_6_q7, rng):
    book = enumerate_codebook(spec_12_6_q7)
    _, y = received(spec_12_6_q7, book, rng)
    w = compute_weights(y, spec_12_6_q7)
    for idx in range(0, len(book), 5):
        word = book.codeword(idx)
        st = origin_state(w, word.tree)
        for bit in word.bits:
            nxt = g_extend(st, bit, w)
            assert nxt.g >= st.g - 1e-12
            assert nxt.g == pytest.approx(batch_g(w, nxt.bits, word.tree), rel=1e-9, abs=1e-9)
            st = nxt
        assert w.ml_from_g(st.g) == pytest.approx(ml_metric(y, word, 2, 7), rel=1e-9)


def test_heuristics_are_admissible(spec_10_5, book_10_5, rng):
    _, y = received(spec_10_5, book_10_5, rng)
    w = compute_weights(y, spec_10_5)
    g_full = {i: batch_g(w, book_10_5.bits[i], book_10_5.trees[i]) for i in range(32)}
    for i in range(32):
        word = book_10_5.codeword(i)
        st = origin_state(w, word.tree)
        for ell, bit in enumerate(word.bits, 1):
            st = g_extend(st, bit, w)
            best = min(g for j, g in g_full.items()
                       if book_10_5.trees[j] == word.tree
                       and tuple(book_10_5.bits[j][:ell]) == word.bits[:ell])
            assert st.g <= best + 1e-9
            assert st.g + heuristic_h2(st, w) <= best + 1e-9
            assert heuristic_h2(st, w) >= -1e-9


def test_h2_vanishes_on_full_paths(spec_10_5, book_10_5, rng):
    _, y = received(spec_10_5, book_10_5, rng)
    w = compute_weights(y, spec_10_5)
    st = origin_state(w, 0)
    for bit in book_10_5.codeword(0).bits:
        st = g_extend(st, bit, w)
    assert heuristic_h2(st, w) == pytest.approx(0.0, abs=1e-9)


def test_h2_reduces_expansions(rng):
    spec = make_spec(22, 11)
    sigma = sigma_for_snr(22, 2, 10.0)
    tot = {"h1": 0, "h2": 0}
    for _ in range(30):
        word = encode(spec, int(rng.integers(2048))).bits
        y = transmit(word, ChannelBlock.draw(2, spec.length, rng), sigma, rng)
        w = compute_weights(y, spec)
        for h in tot:
            tot[h] += decode_priority(y, spec, h, weights=w).expansions
    assert tot["h2"] < tot["h1"]


def test_stack_overflow_erases(spec_10_5, book_10_5, rng):
    _, y = received(spec_10_5, book_10_5, rng, snr_db=0.0)
    for backend in ("python", "numba"):
        res = decode_priority(y, spec_10_5, "h1", cap=1, backend=backend)
        assert res.erased and res.index == -1 and res.codeword is None


def test_trace_records_pops(spec_10_5, book_10_5, rng):
    _, y = received(spec_10_5, book_10_5, rng)
    trace = []
    res = decode_priority(y, spec_10_5, "h2", trace=trace)
    assert len(trace) == res.expansions  # non-terminal pops + final pop
    assert trace[-1][1] == spec_10_5.n
    fs = [row[3] for row in trace]
    assert all(a <= b + 1e-9 for a, b in zip(fs, fs[1:]))  # admissible and consistent here
    buf = io.StringIO()
    write_trace(trace, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "ordinal,level,tree,f,g,h" and len(lines) == len(trace) + 1


def test_zero_padded_input_accepted(spec_12_6_q7, rng):
    book = enumerate_codebook(spec_12_6_q7)
    index, y = received(spec_12_6_q7, book, rng, snr_db=30.0)
    padded = np.concatenate([y, [0.0]])
    assert decode_priority_fast(padded, spec_12_6_q7).index == decode_priority(y, spec_12_6_q7).index
    with pytest.raises(ValueError):
        decode_priority(np.concatenate([y, [1.0]]), spec_12_6_q7)
    with pytest.raises(ValueError):
        decode_priority(y[:-2], spec_12_6_q7)


def test_argument_validation(spec_10_5):
    y = np.zeros(spec_10_5.length, complex)
    with pytest.raises(ValueError):
        decode_priority(y, spec_10_5, "h3")
    with pytest.raises(ValueError):
        decode_priority(y, spec_10_5, cap=0)
    with pytest.raises(ValueError):
        decode_priority(y, spec_10_5, backend="gpu")
    with pytest.raises(ValueError):
        decode_priority(y, spec_10_5, backend="numba", trace=[])
    with pytest.raises(ValueError):
        decode_priority_fast(y, spec_10_5)
    with pytest.raises(ValueError):
        decode_priority(y, make_spec(9, 4, p=3), backend="numba")
