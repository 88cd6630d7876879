"""Invariant suites on the built-in instances (used by ``expdec verify``)."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .expander import build_graph, eml_bound, eml_residual
from .graph_codes import ael_delta, ael_unique_decode, zemor_unique_decode
from .instances import ael_k44, concat_rs_parity, tensor_code
from .pseudoexp import MixturePE, check_axioms
from .rounding import DistributionCollection, threshold_round


def suite_distance() -> dict:
    code = tensor_code()
    dist = code.as_linear_code.min_distance()
    ael = ael_k44()
    lam = ael.graph.lam
    bad = 0
    words = [ael.unchecked_edges(f) for f in ael.outer.codewords()]
    for a, b in itertools.combinations(words, 2):
        dl, _, dr = ael_delta(ael, a, b)
        if dr < ael.delta0 - (Fraction(0) if lam == 0 else Fraction(lam) / dl):
            bad += 1
    return {"passed": dist == code.designed_distance and bad == 0, "tanner_distance": str(dist), "ael_violations": bad}


def suite_eml(pairs: int = 200, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for g in (build_graph("complete", 3, 3), build_graph("cycle", 3, 2), build_graph("random_regular", 20, 5, seed=7)):
        for _ in range(pairs):
            f, h = rng.standard_normal(g.n), rng.standard_normal(g.n)
            f, h = f - f.mean(), h - h.mean()
            worst = max(worst, eml_residual(g, f, h) - eml_bound(g, f, h))
    return {"passed": bool(worst <= 1e-9), "max_excess": float(worst)}


def suite_axioms() -> dict:
    code = tensor_code()
    pe = MixturePE(code.codewords(), t=6)
    rep = check_axioms(pe, tol=1e-12)
    return {"passed": rep.passed, "failures": rep.failures()}


def suite_rounding(trials: int = 100, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(trials):
        n, q = int(rng.integers(1, 7)), int(rng.integers(2, 5))
        rows = []
        for _ in range(n):
            c = rng.integers(0, 4, size=q)
            c[rng.integers(q)] += 1
            rows.append([Fraction(int(x), int(c.sum())) for x in c])
        words = threshold_round(DistributionCollection(rows))
        if len(words) > q * n + 1:
            bad += 1
    return {"passed": bad == 0, "violations": bad}


def suite_roundtrip() -> dict:
    ok = True
    code = tensor_code()
    for c in code.codewords():
        ok &= zemor_unique_decode(code, c) == c
    ael = ael_k44()
    for f, g in ael.folded_codewords():
        ok &= ael_unique_decode(ael, g) == f
    cc = concat_rs_parity()
    for f in cc.outer.codewords():
        w = cc.unchecked_encode(f)
        ok &= [cc.inverse_bijection[b] for b in cc.blocks(w)] == list(f)
    return {"passed": bool(ok)}


SUITES = {
    "distance": suite_distance,
    "eml": suite_eml,
    "axioms": suite_axioms,
    "rounding": suite_rounding,
    "roundtrip": suite_roundtrip,
}


def run_suites(name: str = "all") -> dict:
    names = sorted(SUITES) if name == "all" else [name]
    return {n: SUITES[n]() for n in names}
