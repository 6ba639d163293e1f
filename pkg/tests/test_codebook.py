import itertools
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socodes.codebook import (CodeError, GramTarget, NotACodewordError, PairBlockCounter,
                              ToeplitzCounter, admissible_offdiagonals, codeword_index,
                              count_suffixes_blocks, count_suffixes_p2, count_table_general,
                              encode, enumerate_codebook, format_a_tables_csv, format_codebook,
                              make_spec, make_target, pool_rank, verify_gram)
from socodes.oracles import (all_prefixes, enumerate_a_table, enumerate_pool,
                             enumerate_prefix_counts)

DATA = Path(__file__).parent / "data"


def load_frozen_tables():
    raw = json.loads((DATA / "a_tables_p3.json").read_text())
    out = {}
    for key, grid in raw.items():
        k, tail = key.split("|")
        out[int(k), tuple(int(x) for x in tail.split(","))] = grid
    return out


def test_frozen_tables_match_brute_force():
    for (k, tail), grid in load_frozen_tables().items():
        ref = enumerate_a_table(3, k, tail)
        for a, q1 in enumerate(range(-k, k + 1)):
            for b, q2 in enumerate(range(-k, k + 1)):
                assert ref[(q1, q2)] == grid[a][b]


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
@pytest.mark.parametrize("tail", [(-1, -1), (-1, 1), (1, 1), (1, -1)])
def test_a_table_matches_enumeration(k, tail):
    ref = enumerate_a_table(3, k, tail)
    for q in itertools.product(range(-k, k + 1), repeat=2):
        assert count_table_general(3, k, q, tail) == ref[q]


def test_a_table_p4_spot_check():
    ref = enumerate_a_table(4, 4, (-1, 1, 1))
    for q in itertools.product(range(-4, 5), repeat=3):
        assert count_table_general(4, 4, q, (-1, 1, 1)) == ref[q]


def test_a_table_tail_sign_symmetry():
    for q in itertools.product(range(-4, 5), repeat=2):
        assert count_table_general(3, 4, q, (1, -1)) == count_table_general(3, 4, q, (-1, 1))


def test_a_table_zero_k():
    assert count_table_general(3, 0, (0, 0), (-1, -1)) == 1
    assert count_table_general(3, 1, (0, 0), (-1, -1)) == 0


@pytest.mark.parametrize("args", [(1, 2, (0,), (-1,)), (3, 2, (0,), (-1, -1)),
                                  (3, 2, (0, 0), (-1,)), (3, 2, (0, 0), (0, 1)),
                                  (3, -1, (0, 0), (-1, 1)), (3, 2, (3, 0), (-1, 1))])
def test_a_table_rejects_bad_arguments(args):
    with pytest.raises(ValueError):
        count_table_general(*args)


def test_a_tables_csv_layout():
    text = format_a_tables_csv(3, 2)
    lines = text.strip().splitlines()
    assert lines[0] == "k,tail,q1,q2=-2,q2=-1,q2=0,q2=1,q2=2"
    assert lines[1].startswith("2,-1:-1,-2,")
    assert len(lines) == 1 + 2 * 5


@pytest.mark.parametrize("n", range(2, 11))
def test_closed_form_counts_against_enumeration(n):
    for (c,) in admissible_offdiagonals(n, 2):
        ref = enumerate_prefix_counts(n, 2, (c,))
        target = make_target(n, 2, None, (c,))
        for prefix in all_prefixes(n):
            assert count_suffixes_p2(n, target, prefix) == ref[prefix]


@pytest.mark.parametrize("n,q", [(8, 3), (9, 4), (10, 6)])
def test_subblock_counts_against_enumeration(n, q):
    for c in admissible_offdiagonals(n, 2, q):
        ref = enumerate_prefix_counts(n, 2, c, q)
        target = make_target(n, 2, q, c)
        for prefix in all_prefixes(n):
            assert count_suffixes_blocks(n, q, target, prefix) == ref[prefix]


def test_toeplitz_counter_matches_enumeration():
    for c in admissible_offdiagonals(9, 3):
        ref = enumerate_prefix_counts(9, 3, c)
        counter = ToeplitzCounter(9, 3, c)
        for prefix in all_prefixes(9):
            assert counter.count(counter.state_of(prefix)) == ref[prefix]


def test_admissible_offdiagonals_parity():
    assert admissible_offdiagonals(11, 2) == [(0,)]
    assert admissible_offdiagonals(10, 2) == [(-1,), (1,)]
    assert admissible_offdiagonals(12, 2, 7) == [(0, -1), (0, 1)]
    assert admissible_offdiagonals(12, 2, 5) == [(0, -1, 0), (0, 1, 0)]


def test_counter_rejects_parity_violation():
    with pytest.raises(CodeError):
        PairBlockCounter(12, 7, (1, 1))


def test_gram_target_matches():
    target = make_target(10, 2, None, (-1,))
    assert np.array_equal(target.matrix, np.array([[10, -1], [-1, 10]]))
    assert target.matches([target.matrix])
    assert not target.matches([np.eye(2) * 10])
    rebuilt = GramTarget.from_arrays(target.arrays(), target.offdiag)
    assert rebuilt == target


@pytest.mark.parametrize("n,k,q", [(10, 5, None), (11, 5, None), (12, 6, None),
                                   (12, 6, 7), (12, 5, 5)])
def test_codebook_is_gram_exact_and_distinct(n, k, q):
    spec = make_spec(n, k, q=q)
    book = enumerate_codebook(spec)
    assert len({tuple(b) for b in book.bits}) == 2 ** k
    for i in range(len(book)):
        word = book.codeword(i)
        assert word.bits[0] == -1
        grams = verify_gram(word, 2, q)
        assert spec.targets[word.tree].matches([grams] if q is None else grams)
        assert codeword_index(spec, word) == i


def test_encoder_uses_first_pool_member_and_spacing():
    spec = make_spec(10, 5)
    for tree, c in enumerate(o for o in admissible_offdiagonals(10, 2)):
        pool = enumerate_pool(10, 2, c)
        assert spec.pool_size(tree) == len(pool)
        delta = spec.deltas[tree]
        for i in range(spec.per_tree):
            word = encode(spec, tree * spec.per_tree + i)
            assert word.bits == pool[i * delta]
            assert pool_rank(spec, tree, word.bits) == i * delta


def test_single_and_double_modes():
    single = make_spec(22, 11, mode="single")
    double = make_spec(22, 11, mode="double")
    assert single.theta == 1 and double.theta == 2
    assert double.per_tree == 2 ** 10
    assert make_spec(22, 11).theta == 2
    assert make_spec(21, 10).theta == 1


def test_code_too_large():
    with pytest.raises(CodeError, match="too large"):
        make_spec(4, 3)


def test_invalid_parameters():
    with pytest.raises((CodeError, ValueError)):
        make_spec(10, 0)
    with pytest.raises((CodeError, ValueError)):
        make_spec(10, 5, mode="triple")
    with pytest.raises((CodeError, ValueError)):
        encode(make_spec(10, 5), 32)


def test_non_codeword_rejected():
    spec = make_spec(10, 5)
    with pytest.raises(NotACodewordError):
        codeword_index(spec, (-1,) * 10)
    with pytest.raises((NotACodewordError, ValueError)):
        codeword_index(spec, (1, 0, 1))


def test_format_codebook(book_10_5):
    lines = format_codebook(book_10_5).strip().splitlines()
    assert len(lines) == 32
    index, tree, word = lines[0].split("\t")
    assert (index, tree) == ("0", "0") and set(word) <= {"+", "-"} and len(word) == 10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 11 - 1))
def test_encode_roundtrip_22_11(index):
    spec = _SPEC_22
    word = encode(spec, index)
    assert verify_gram(word, 2)[0, 0] == 22
    assert codeword_index(spec, word) == index


_SPEC_22 = make_spec(22, 11)
