import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import grid_codewords
from expdec.algebra import hamming_distance
from expdec.pipelines import (
    DecodeConfig,
    DecodingList,
    InvariantViolation,
    ListEntry,
    as_fraction,
    brute_force_list,
    default_degree,
    list_decode,
    list_decode_ael,
    list_decode_concat,
    list_decode_tanner,
    near_mds_params,
)

G = (0, 1, 0, 0, 1, 0, 0, 0, 0)
F = Fraction


def grid_list(g, radius):
    return sorted(c for c in grid_codewords() if hamming_distance(c, g) < radius)


def test_as_fraction_uses_decimal_value():
    assert as_fraction(0.05) == F(1, 20)
    assert as_fraction(3) == 3
    assert as_fraction(F(2, 7)) == F(2, 7)


def test_config_validation():
    with pytest.raises(ValueError):
        DecodeConfig(eps=0)
    with pytest.raises(ValueError):
        DecodeConfig(eps=0.1, mode="greedy")
    with pytest.raises(ValueError):
        DecodeConfig(eps=0.1, k_max=-1)
    assert DecodeConfig(eps=0.05).to_dict()["eps"] == "1/20"


def test_decoding_list_invariants():
    e = ListEntry((0, 1), F(1, 2))
    with pytest.raises(ValueError):
        DecodingList([e, ListEntry((0, 1), F(1, 2))], F(1))
    with pytest.raises(ValueError):
        DecodingList([e], F(1, 2))
    L = DecodingList([ListEntry((1, 1), F(0)), e], F(1))
    assert L.words == [(1, 1), (0, 1)]
    assert (0, 1) in L and len(L) == 2
    assert L.to_dict()["list"][1] == {"word": [0, 1], "distance": "1/2"}


def test_brute_force_list(tensor):
    L = brute_force_list(tensor, G, F(1, 3))
    assert L.words == grid_list(G, F(1, 3))
    assert L.words == [(0,) * 9, (0, 1, 1, 0, 1, 1, 0, 0, 0), (1, 1, 0, 1, 1, 0, 0, 0, 0)]
    assert all(e.distance == F(2, 9) for e in L.entries)
    assert len(brute_force_list(tensor, G, 0)) == 0
    assert len(brute_force_list(tensor, G, F(11, 10))) == 16


def test_default_degree(tensor, ael):
    assert default_degree(tensor, 0) == 12
    # 512 PSD rows at t = 18 fit the budget
    assert default_degree(tensor, 1) == 18
    assert default_degree(ael, 0) == 8


def test_tanner_worked_example_full_list(tensor):
    L = list_decode_tanner(tensor, G, DecodeConfig(eps=0.05, t=12, k_max=1))
    radius = F(1, 3) - F(1, 20)
    assert L.radius == radius
    assert L.words == grid_list(G, radius)
    assert L.stats["dichotomy_violations"] == 0 and L.stats["covering_violations"] == 0


def test_tanner_low_degree_is_a_subset(tensor):
    L = list_decode_tanner(tensor, G, DecodeConfig(eps=0.05, t=6, k_max=0))
    full = grid_list(G, F(1, 3) - F(1, 20))
    assert set(L.words) <= set(full)
    assert len(L) == 2


def test_tanner_codeword_in_list(tensor):
    c = grid_codewords()[9]
    L = list_decode(tensor, c, DecodeConfig(eps=0.05, t=12, k_max=1))
    assert c in L and L.entries[0].distance == 0


def test_tanner_eps_beyond_johnson(tensor):
    L = list_decode_tanner(tensor, G, DecodeConfig(eps=F(1, 3)))
    assert len(L) == 0 and L.stats["reason"] == "radius <= 0"


def test_tanner_wrong_length(tensor):
    with pytest.raises(ValueError):
        list_decode_tanner(tensor, (0,) * 8, DecodeConfig(eps=0.05))


def test_tanner_audit_mode_passes(tensor):
    L = list_decode_tanner(tensor, G, DecodeConfig(eps=0.05, t=12, k_max=1, audit=True))
    assert len(L) == 3
    assert issubclass(InvariantViolation, AssertionError)


def test_ael_codeword_in_list(ael):
    f = ael.outer.codewords()[4]
    g = ael.fold(ael.encode_edges(f))
    L = list_decode_ael(ael, g, DecodeConfig(eps=0.05))
    assert L.words == [g] and L.entries[0].outer == f


def test_ael_one_bit_corruption(ael):
    f = ael.outer.codewords()[11]
    w = list(ael.encode_edges(f))
    w[5] ^= 1
    g = ael.fold(w)
    cfg = DecodeConfig(eps=0.02)
    L = list_decode_ael(ael, g, cfg)
    ref = brute_force_list(ael, g, L.radius)
    assert L.words == ref.words
    assert ael.fold(ael.encode_edges(f)) in L


def test_ael_far_word_empty(ael):
    words = [g for _, g in ael.folded_codewords()]
    rng = np.random.default_rng(0)
    best, far = -1, None
    for _ in range(300):
        g = tuple(tuple(int(x) for x in rng.integers(0, 2, 4)) for _ in range(4))
        dmin = min(hamming_distance(g, h) for h in words)
        if dmin > best:
            best, far = dmin, g
    L = list_decode_ael(ael, far, DecodeConfig(eps=0.05))
    assert best >= L.radius
    assert len(L) == 0


def test_concat_two_flips(concat):
    f = concat.outer.codewords()[13]
    w = list(concat.unchecked_encode(f))
    w[0] ^= 1
    w[7] ^= 1
    L = list_decode_concat(concat, w, DecodeConfig(eps=0.02, delta_dec=F(1, 2)))
    assert L.radius == pytest.approx(0.5 * (1 - math.sqrt(1 / 3)) - 0.02)
    assert concat.unchecked_encode(f) in L
    assert L.words == brute_force_list(concat, w, L.radius).words


def test_concat_codeword(concat):
    f = concat.outer.codewords()[2]
    w = concat.unchecked_encode(f)
    L = list_decode_concat(concat, w, DecodeConfig(eps=0.02, delta_dec=F(1, 2)))
    assert L.words == [w]


def test_concat_unique_outer_decoder(concat):
    f = concat.outer.codewords()[8]
    w = concat.unchecked_encode(f)
    L = list_decode_concat(concat, w, DecodeConfig(eps=0.02, delta_dec=F(1, 4), outer_decoder="unique"))
    assert L.words == [w]
    v = list(w)
    v[4] ^= 1
    # one flip is 1/12 away, beyond J(1/6) - eps
    assert len(list_decode_concat(concat, v, DecodeConfig(eps=0.02, delta_dec=F(1, 4), outer_decoder="unique"))) == 0


def test_near_mds_params():
    p = near_mds_params(F(1, 8))
    assert p["delta_dec"] == F(1, 64) and p["lambda"] == F(1, 512)
    d = p["degree"]
    lam = p["lambda"]
    assert 4 * (d - 1) <= lam * lam * d * d
    assert 4 * (d - 2) > lam * lam * (d - 1) ** 2
    assert abs(d - 2**20) < 2**20 / 100
    assert p["rate"] == F(7, 16)
    assert p["distance_bound"] == 1 - F(7, 16) - F(3, 8)
    assert near_mds_params(F(49, 100))["warnings"]
    with pytest.raises(ValueError):
        near_mds_params(F(1, 2))


@pytest.mark.slow
def test_tanner_t6_sweep_is_subset(tensor):
    """Without conditioning the symmetric minimiser cannot separate tied list members."""
    cfg = DecodeConfig(eps=0.05, t=6, k_max=0)
    radius = F(1, 3) - F(1, 20)
    short = 0
    for c in tensor.codewords():
        for pos in itertools.combinations(range(9), 2):
            g = list(c)
            for p in pos:
                g[p] ^= 1
            L = list_decode_tanner(tensor, g, cfg)
            ref = grid_list(g, radius)
            assert set(L.words) <= set(ref)
            short += L.words != ref
    assert short == 396
