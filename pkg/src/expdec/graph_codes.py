"""Tanner, AEL and concatenated codes over bipartite expanders."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterator, Sequence

import numpy as np

from .algebra import (
    DEFAULT_ENUM_BUDGET,
    BudgetExceeded,
    LinearCode,
    ReedSolomonCode,
    Word,
    as_word,
    hamming_distance,
    nullspace,
    rs_unique_decode,
)
from .expander import BipartiteExpander


def _designed(delta0: Fraction, lam: float):
    """``delta0 * (delta0 - lam)``, exact when ``lam`` is zero."""
    if lam == 0:
        return delta0 * delta0
    return float(delta0) * (float(delta0) - lam)


def outer_unique_decoder(code: LinearCode) -> Callable[[Sequence[int]], Word | None]:
    """Berlekamp-Welch for RS codes, otherwise nearest codeword within half the distance."""
    if isinstance(code, ReedSolomonCode):
        return lambda y: rs_unique_decode(code, y)

    def decode(y):
        c, dist = code.nearest_codeword(y)
        return c if 2 * dist < code.min_distance() else None

    return decode


# -- Tanner -----------------------------------------------------------------


@dataclass
class TannerCode:
    """Edge words whose every left and right local view lies in ``inner``."""

    graph: BipartiteExpander
    inner: LinearCode

    def __post_init__(self):
        if self.inner.n != self.graph.d:
            raise ValueError(f"inner code length {self.inner.n} != degree {self.graph.d}")

    @property
    def q(self) -> int:
        return self.inner.q

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def delta0(self) -> Fraction:
        return self.inner.min_distance()

    @property
    def designed_distance(self):
        return _designed(self.delta0, self.graph.lam)

    def neighborhoods(self) -> list[list[int]]:
        return self.graph.left_order + self.graph.right_order

    @cached_property
    def as_linear_code(self) -> LinearCode:
        """The Tanner code as a linear code over the edges (nullspace of all local checks)."""
        F, H0 = self.inner.field, self.inner.paritycheck
        rows = []
        for nbr in self.neighborhoods():
            for h in H0:
                row = np.zeros(self.m, dtype=np.int64)
                row[nbr] = h
                rows.append(row)
        H = np.array(rows, dtype=np.int64).reshape(-1, self.m)
        G = nullspace(F, H, ncols=self.m)
        if G.shape[0] == 0:
            raise ValueError("Tanner code is trivial (dimension 0)")
        return LinearCode(F, G, name="tanner")

    def encode(self, msg: Sequence[int]) -> Word:
        return self.as_linear_code.encode(msg)

    def codewords(self, budget: int = DEFAULT_ENUM_BUDGET) -> list[Word]:
        return self.as_linear_code.codewords(budget)

    def to_descriptor(self) -> dict:
        return {"kind": "tanner", "graph": self.graph.to_dict(), "inner": self.inner.to_dict()}


def tanner_build(graph: BipartiteExpander, inner: LinearCode) -> TannerCode:
    return TannerCode(graph, inner)


def tanner_member(code: TannerCode, w: Sequence[int]) -> bool:
    if len(w) != code.m:
        raise ValueError(f"word length {len(w)} != {code.m} edges")
    arr = np.asarray(w, dtype=np.int64)
    return all(code.inner.is_codeword(arr[nbr]) for nbr in code.neighborhoods())


def tanner_enumerate(code: TannerCode, budget: int = DEFAULT_ENUM_BUDGET) -> Iterator[Word]:
    lin = code.as_linear_code
    if lin.size > budget:
        raise BudgetExceeded(f"{lin.size} Tanner codewords exceed budget {budget}")
    yield from lin.codewords(budget)


def zemor_decode_trace(code: TannerCode, w: Sequence[int], max_rounds: int | None = None) -> tuple[Word | None, int]:
    """Alternating local decoding, left side first.

    Returns ``(codeword or None, rounds)`` where each half round (one side)
    counts as a round.  A word that is already a codeword takes 0 rounds.
    """
    if max_rounds is None:
        max_rounds = math.ceil(math.log2(code.m)) + 4
    cur = list(as_word(w))
    if tanner_member(code, cur):
        return tuple(cur), 0
    sides = [code.graph.left_order, code.graph.right_order]
    for rnd in range(max_rounds):
        for nbr in sides[rnd % 2]:
            local, _ = code.inner.nearest_codeword([cur[e] for e in nbr])
            for e, s in zip(nbr, local):
                cur[e] = s
        if tanner_member(code, cur):
            return tuple(cur), rnd + 1
    return None, max_rounds


def zemor_unique_decode(code: TannerCode, w: Sequence[int], max_rounds: int | None = None) -> Word | None:
    return zemor_decode_trace(code, w, max_rounds)[0]


# -- AEL --------------------------------------------------------------------


@dataclass
class AELCode:
    """AEL distance amplification of ``outer`` through ``inner`` on ``graph``.

    Outer symbol ``i`` stands for the ``i``-th inner codeword in sorted order.
    """

    graph: BipartiteExpander
    inner: LinearCode
    outer: LinearCode

    def __post_init__(self):
        if self.inner.n != self.graph.d:
            raise ValueError("inner code length must equal the degree")
        if self.inner.size != self.outer.q:
            raise ValueError(f"|C0| = {self.inner.size} must equal outer alphabet {self.outer.q}")
        if self.outer.n != self.graph.n:
            raise ValueError("outer code length must equal the number of left vertices")

    @property
    def q0(self) -> int:
        return self.inner.q

    @property
    def q1(self) -> int:
        return self.outer.q

    @property
    def d(self) -> int:
        return self.graph.d

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def delta0(self) -> Fraction:
        return self.inner.min_distance()

    @property
    def delta1(self) -> Fraction:
        return self.outer.min_distance()

    @property
    def designed_distance(self):
        lam = self.graph.lam
        if lam == 0:
            return self.delta0
        return float(self.delta0) - lam / float(self.delta1)

    @cached_property
    def bijection(self) -> list[Word]:
        return self.inner.sorted_codewords

    @cached_property
    def inverse_bijection(self) -> dict[Word, int]:
        return {c: i for i, c in enumerate(self.bijection)}

    def encode_edges(self, f: Sequence[int]) -> Word:
        if not self.outer.is_codeword(f):
            raise ValueError("message is not an outer codeword")
        return self.unchecked_edges(f)

    def unchecked_edges(self, f: Sequence[int]) -> Word:
        w = [0] * self.m
        for l, sym in enumerate(f):
            for e, s in zip(self.graph.left_order[l], self.bijection[int(sym)]):
                w[e] = s
        return tuple(w)

    def fold(self, w: Sequence[int]) -> tuple[Word, ...]:
        return tuple(tuple(int(w[e]) for e in nbr) for nbr in self.graph.right_order)

    def unfold(self, g: Sequence[Sequence[int]]) -> Word:
        w = [0] * self.m
        for nbr, sym in zip(self.graph.right_order, g):
            if len(sym) != self.d:
                raise ValueError("folded symbol has wrong length")
            for e, s in zip(nbr, sym):
                w[e] = int(s)
        return tuple(w)

    def left_symbols(self, w: Sequence[int]) -> list[Word]:
        return [tuple(int(w[e]) for e in nbr) for nbr in self.graph.left_order]

    def folded_codewords(self, budget: int = DEFAULT_ENUM_BUDGET) -> list[tuple[Word, tuple]]:
        """Pairs ``(outer codeword, folded encoding)`` for every outer codeword."""
        return [(f, self.fold(self.unchecked_edges(f))) for f in self.outer.codewords(budget)]

    def to_descriptor(self) -> dict:
        return {
            "kind": "ael",
            "graph": self.graph.to_dict(),
            "inner": self.inner.to_dict(),
            "outer": self.outer.to_dict(),
            "bijection": [list(c) for c in self.bijection],
        }


def symbol_index(sym: Sequence[int], q: int) -> int:
    """Big-endian index of a tuple in ``[q]^d`` (matches lexicographic order)."""
    v = 0
    for s in sym:
        v = v * q + int(s)
    return v


def index_symbol(v: int, q: int, d: int) -> Word:
    out = []
    for _ in range(d):
        v, r = divmod(v, q)
        out.append(r)
    return tuple(reversed(out))


def ael_build(graph: BipartiteExpander, inner: LinearCode, outer: LinearCode) -> AELCode:
    return AELCode(graph, inner, outer)


def ael_encode(code: AELCode, f: Sequence[int]) -> tuple[Word, tuple[Word, ...]]:
    w = code.encode_edges(f)
    return w, code.fold(w)


def ael_delta(code: AELCode, w1: Sequence[int], w2: Sequence[int]) -> tuple[Fraction, Fraction, Fraction]:
    """``(Delta^L, Delta, Delta^R)`` between two edge words."""
    if len(w1) != code.m or len(w2) != code.m:
        raise ValueError("edge words have wrong length")
    diff = [a != b for a, b in zip(w1, w2)]
    left = Fraction(sum(any(diff[e] for e in nbr) for nbr in code.graph.left_order), code.n)
    right = Fraction(sum(any(diff[e] for e in nbr) for nbr in code.graph.right_order), code.n)
    return left, Fraction(sum(diff), code.m), right


def ael_unique_decode(code: AELCode, g: Sequence[Sequence[int]]) -> Word | None:
    """Nearest inner codeword per left vertex, then outer unique decoding."""
    w = code.unfold(g)
    y = []
    for sym in code.left_symbols(w):
        c, _ = code.inner.nearest_codeword(sym)
        y.append(code.inverse_bijection[c])
    return outer_unique_decoder(code.outer)(y)


# -- concatenation -----------------------------------------------------------


@dataclass
class ConcatCode:
    """Outer code over ``[q1]`` with each symbol replaced by an inner codeword."""

    outer: LinearCode
    inner: LinearCode

    def __post_init__(self):
        if self.inner.size != self.outer.q:
            raise ValueError(f"|C0| = {self.inner.size} must equal outer alphabet {self.outer.q}")

    @property
    def q0(self) -> int:
        return self.inner.q

    @property
    def q1(self) -> int:
        return self.outer.q

    @property
    def d(self) -> int:
        return self.inner.n

    @property
    def n(self) -> int:
        return self.outer.n

    @property
    def length(self) -> int:
        return self.n * self.d

    @property
    def delta0(self) -> Fraction:
        return self.inner.min_distance()

    @property
    def delta1(self) -> Fraction:
        return self.outer.min_distance()

    @cached_property
    def bijection(self) -> list[Word]:
        return self.inner.sorted_codewords

    @cached_property
    def inverse_bijection(self) -> dict[Word, int]:
        return {c: i for i, c in enumerate(self.bijection)}

    def blocks(self, w: Sequence[int]) -> list[Word]:
        d = self.d
        return [tuple(int(x) for x in w[i * d : (i + 1) * d]) for i in range(self.n)]

    def unchecked_encode(self, f: Sequence[int]) -> Word:
        return tuple(s for sym in f for s in self.bijection[int(sym)])

    def to_descriptor(self) -> dict:
        return {
            "kind": "concat",
            "inner": self.inner.to_dict(),
            "outer": self.outer.to_dict(),
            "bijection": [list(c) for c in self.bijection],
        }


def concat_build(outer: LinearCode, inner: LinearCode) -> ConcatCode:
    return ConcatCode(outer, inner)


def concat_encode(code: ConcatCode, f: Sequence[int]) -> Word:
    if len(f) != code.n or not code.outer.is_codeword(f):
        raise ValueError("message is not an outer codeword")
    return code.unchecked_encode(f)


def concat_member(code: ConcatCode, w: Sequence[int]) -> bool:
    if len(w) != code.length:
        raise ValueError(f"word length {len(w)} != {code.length}")
    outer = []
    for b in code.blocks(w):
        if b not in code.inverse_bijection:
            return False
        outer.append(code.inverse_bijection[b])
    return code.outer.is_codeword(outer)


def concat_codewords(code: ConcatCode, budget: int = DEFAULT_ENUM_BUDGET) -> list[tuple[Word, Word]]:
    """Pairs ``(outer codeword, concatenated word)``."""
    return [(f, code.unchecked_encode(f)) for f in code.outer.codewords(budget)]


def min_pairwise_distance(words: Sequence[Sequence[int]]) -> Fraction:
    best = Fraction(1)
    for i in range(len(words)):
        for j in range(i + 1, len(words)):
            best = min(best, hamming_distance(words[i], words[j]))
    return best
