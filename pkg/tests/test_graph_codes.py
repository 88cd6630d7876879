import itertools
from fractions import Fraction

import numpy as np
import pytest

from conftest import grid_codewords
from expdec.algebra import Field, parity_code, repetition_code, rs_build
from expdec.expander import build_graph
from expdec.graph_codes import (
    TannerCode,
    ael_delta,
    ael_encode,
    ael_unique_decode,
    concat_codewords,
    concat_encode,
    concat_member,
    min_pairwise_distance,
    tanner_enumerate,
    tanner_member,
    zemor_decode_trace,
    zemor_unique_decode,
)
from expdec.instances import hamming_tanner


def test_tensor_membership(tensor):
    assert tanner_member(tensor, (0, 1, 1, 0, 1, 1, 0, 0, 0))
    assert tanner_member(tensor, (0,) * 9)
    assert not tanner_member(tensor, (1,) + (0,) * 8)


def test_tensor_enumeration_matches_grid_oracle(tensor):
    words = sorted(tanner_enumerate(tensor))
    assert words == sorted(grid_codewords())
    assert len(words) == 16
    assert min_pairwise_distance(words) == Fraction(4, 9)


def test_tensor_designed_distance(tensor):
    assert tensor.delta0 == Fraction(2, 3)
    assert tensor.designed_distance == Fraction(4, 9)


def test_repetition_on_connected_graph():
    code = TannerCode(build_graph("cycle", 4, 2), repetition_code(Field(2), 2))
    assert sorted(tanner_enumerate(code)) == [(0,) * 8, (1,) * 8]


def test_k22_repetition(k22):
    assert sorted(tanner_enumerate(k22)) == [(0,) * 4, (1,) * 4]


def test_zemor_single_flip():
    code = hamming_tanner()
    rng = np.random.default_rng(3)
    cws = code.codewords(budget=1 << 17)
    for i in rng.choice(len(cws), 5, replace=False):
        c = list(cws[i])
        c[int(rng.integers(49))] ^= 1
        out, rounds = zemor_decode_trace(code, c)
        assert out == cws[i] and rounds == 1


def test_zemor_codeword_fixpoint(tensor):
    c = (0, 1, 1, 0, 1, 1, 0, 0, 0)
    assert zemor_decode_trace(tensor, c) == (c, 0)


def test_zemor_gives_up():
    code = TannerCode(build_graph("cycle", 6, 3), parity_code(Field(2), 3))
    rng = np.random.default_rng(0)
    words = [tuple(int(x) for x in rng.integers(0, 2, 18)) for _ in range(300)]
    stuck = [w for w in words if zemor_unique_decode(code, w, max_rounds=2) is None]
    assert stuck
    for w in stuck[:10]:
        assert zemor_decode_trace(code, w, max_rounds=2) == (None, 2)


def test_ael_zero_and_single_symbol(ael):
    assert ael_encode(ael, (0, 0, 0, 0))[0] == (0,) * 16
    f = (1, 0, 0, 0)
    w = ael.unchecked_edges(f)
    nbr = ael.graph.left_order[0]
    assert tuple(w[e] for e in nbr) == ael.bijection[1]
    assert all(w[e] == 0 for e in range(16) if e not in nbr)


def test_ael_delta_single_edge(ael):
    w = (0,) * 16
    v = (1,) + (0,) * 15
    assert ael_delta(ael, w, w) == (0, 0, 0)
    assert ael_delta(ael, w, v) == (Fraction(1, 4), Fraction(1, 16), Fraction(1, 4))


def test_ael_amplification_all_pairs(ael):
    outers = ael.outer.codewords()
    encs = [ael.encode_edges(f) for f in outers]
    lam = Fraction(0)
    for a, b in itertools.combinations(range(16), 2):
        dl, _, dr = ael_delta(ael, encs[a], encs[b])
        assert dl >= Fraction(3, 4)
        assert dr >= ael.delta0 - lam / dl
        assert dr >= Fraction(1, 2)


def test_ael_unique_decode(ael):
    # a single wrong edge touches one left vertex, within the RS[4,2] radius
    for f in ael.outer.codewords():
        w, g = ael_encode(ael, f)
        assert ael_unique_decode(ael, g) == f
        for e in range(16):
            v = list(w)
            v[e] ^= 1
            assert ael_unique_decode(ael, ael.fold(v)) == f


def test_ael_random_words_decode_far_or_none(ael):
    rng = np.random.default_rng(0)
    for _ in range(200):
        g = [tuple(int(x) for x in rng.integers(0, 2, 4)) for _ in range(4)]
        f = ael_unique_decode(ael, g)
        if f is not None:
            assert f in ael.outer.codewords()


def test_concat_members(concat):
    assert concat_encode(concat, (0, 0, 0, 0)) == (0,) * 12
    f = rs_build(Field(4), 4, 2).encode((1, 0))
    w = concat_encode(concat, f)
    assert concat_member(concat, w)
    for i in range(12):
        v = list(w)
        v[i] ^= 1
        assert not concat_member(concat, v)


def test_concat_codewords(concat):
    pairs = concat_codewords(concat)
    assert len(pairs) == 16
    assert all(concat_member(concat, w) for _, w in pairs)
    # designed bound delta0 * delta1 = 2/3 * 3/4 is attained
    assert min_pairwise_distance([w for _, w in pairs]) == Fraction(1, 2)
