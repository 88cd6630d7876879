"""Simplex embeddings, Johnson bounds and covering-program inputs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .graph_codes import AELCode, ConcatCode, TannerCode, symbol_index
from .pseudoexp import PseudoExpectation

Number = Fraction | float


@lru_cache(maxsize=None)
def chi_build(q: int) -> np.ndarray:
    """``q x (q-1)`` matrix whose rows are unit vectors with pairwise product ``-1/(q-1)``.

    Sign convention: the first ``q-1`` rows are the lower-triangular Cholesky
    factor of their Gram matrix, the last row is minus their sum.
    """
    if q < 2:
        raise ValueError("alphabet size must be >= 2")
    G = (q / (q - 1)) * np.eye(q - 1) - 1.0 / (q - 1)
    L = np.linalg.cholesky(G)
    chi = np.vstack([L, -L.sum(axis=0)])
    chi.setflags(write=False)
    return chi


def embed_word(w: Sequence[int], q: int) -> np.ndarray:
    """Coordinate-wise ``chi_q`` scaled to unit norm."""
    chi = chi_build(q)
    return chi[np.asarray(w, dtype=np.int64)].reshape(-1) / math.sqrt(len(w))


def embed_folded(g: Sequence[Sequence[int]], q0: int) -> np.ndarray:
    """``chi_{q0^d}`` applied to each folded symbol, scaled to unit norm."""
    d = len(g[0])
    return embed_word([symbol_index(s, q0) for s in g], q0**d)


def order_rows(x: np.ndarray, nbr: Sequence[int], q: int) -> np.ndarray:
    """Reindex rows of a joint table from sorted-variable order to ``nbr`` order."""
    nbr = list(nbr)
    perm = np.argsort(np.argsort(nbr))
    if np.all(perm == np.arange(len(nbr))):
        return x
    idx = np.arange(q ** len(nbr)).reshape((q,) * len(nbr))
    idx = np.transpose(idx, perm).reshape(-1)
    return x[idx]


def pe_embed(pe: PseudoExpectation, groups: Sequence[Sequence[int]] | None = None) -> np.ndarray:
    """``E~[chi(Z)]`` per variable, or per group of variables (folded embedding)."""
    if groups is None:
        groups = [(v,) for v in range(pe.m)]
    chi = chi_build(pe.q ** len(groups[0]))
    return np.concatenate([chi.T @ order_rows(pe.joint(tuple(g)), g, pe.q) for g in groups]) / math.sqrt(len(groups))


def embedded_inner(f: Sequence[int], g: Sequence[int], q: int) -> Fraction:
    """Exact ``<chi(f), chi(g)> = 1 - q Delta / (q-1)``."""
    agree = sum(a == b for a, b in zip(f, g))
    n = len(f)
    return Fraction(agree * (q - 1) - (n - agree), n * (q - 1))


# -- Johnson bounds ----------------------------------------------------------------


def exact_sqrt(x: Number) -> Number:
    """Square root, exact when ``x`` is a square of a rational."""
    if isinstance(x, Fraction):
        if x < 0:
            raise ValueError("negative square root")
        a, b = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if a * a == x.numerator and b * b == x.denominator:
            return Fraction(a, b)
        return math.sqrt(x)
    return math.sqrt(x)


@dataclass(frozen=True)
class JohnsonParams:
    q: int
    delta: Number
    beta: Number
    johnson: Number


def johnson(q: int, delta: Number) -> JohnsonParams:
    """``J_q(delta) = (1 - 1/q)(1 - sqrt(beta))`` with ``beta = 1 - q delta / (q-1)``."""
    if isinstance(delta, int):
        delta = Fraction(delta)
    if not 0 <= delta <= 1 - Fraction(1, q):
        raise ValueError(f"delta must lie in [0, 1 - 1/q], got {delta}")
    if isinstance(delta, Fraction):
        beta = 1 - Fraction(q, q - 1) * delta
        J = (1 - Fraction(1, q)) * (1 - exact_sqrt(beta))
    else:
        beta = max(1 - q * delta / (q - 1), 0.0)
        J = (1 - 1 / q) * (1 - math.sqrt(beta))
    return JohnsonParams(q, delta, beta, J)


def _check_rows(weights) -> np.ndarray:
    W = np.asarray(weights, dtype=float)
    if W.ndim != 2 or np.any(W < 0):
        raise ValueError("weights must be a nonnegative n x q matrix")
    if np.any(np.abs(W.sum(axis=1) - 1) > 1e-9):
        raise ValueError("weight rows must sum to 1")
    return W


def weighted_threshold(weights, q: int, delta: Number) -> float:
    """Agreement threshold ``1/q + sqrt((1 - 1/q) E_i[W_i2 - 1/q] beta)``."""
    W = _check_rows(weights)
    beta = float(johnson(q, delta).beta)
    spread = float(np.mean((W**2).sum(axis=1) - 1.0 / q))
    return 1.0 / q + math.sqrt(max((1 - 1 / q) * spread * beta, 0.0))


def weights_to_u(weights) -> np.ndarray:
    """Normalised concatenation of ``sum_j w_ij chi(j)``."""
    W = _check_rows(weights)
    u = (W @ chi_build(W.shape[1])).reshape(-1)
    nrm = np.linalg.norm(u)
    if nrm < 1e-12:
        raise ValueError("weights embed to the zero vector (uniform rows)")
    return u / nrm


def weighted_agreement(weights, h: Sequence[int]) -> float:
    W = np.asarray(weights, dtype=float)
    return float(np.mean(W[np.arange(len(h)), np.asarray(h)]))


# -- covering program inputs ---------------------------------------------------------


@dataclass
class CoveringSetup:
    """Inputs of the covering program and the radius they certify."""

    kind: str
    q: int  # alphabet of the embedding
    delta: Number
    eps: float
    beta: Number
    u: np.ndarray
    gamma: float
    eps2: float
    radius: float
    groups: list[tuple[int, ...]] | None = None


def covering_setup(code, received, eps: float, delta: Number | None = None) -> CoveringSetup:
    """Target vector, margin and distance slack for list decoding ``received``.

    ``received`` is an edge word (Tanner, concatenated), a folded word (AEL) or
    an ``n x q`` weight matrix (list recovery).  ``delta`` overrides the
    code's distance parameter (required for concatenated codes, where it is
    ``delta_dec * delta0``).
    """
    if isinstance(code, TannerCode):
        kind, q, groups = "tanner", code.q, None
        delta = code.designed_distance if delta is None else delta
    elif isinstance(code, AELCode):
        kind, q, groups = "ael", code.q0**code.d, [tuple(r) for r in code.graph.right_order]
        delta = code.designed_distance if delta is None else delta
    elif isinstance(code, ConcatCode):
        kind, q, groups = "concat", code.q0, None
        if delta is None:
            raise ValueError("concatenated codes need delta = delta_dec * delta0")
    else:
        raise TypeError(f"unsupported code type {type(code).__name__}")
    jp = johnson(q, delta)
    J = float(jp.johnson)
    if not 0 < eps < J:
        raise ValueError(f"eps must lie in (0, J) = (0, {J:.6g})")
    sb = math.sqrt(float(jp.beta))
    arr = np.asarray(received)
    if arr.ndim == 2 and arr.dtype.kind == "f":
        if kind == "ael":
            raise ValueError("weighted input is not supported for AEL codes")
        u = weights_to_u(arr)
        spread = float(np.mean((arr**2).sum(axis=1) - 1.0 / q))
        gamma = sb + math.sqrt(q / ((q - 1) * spread)) * eps
        eps2 = 2 * eps * sb * math.sqrt((q - 1) / (q * spread))
        kind = kind + "-weighted"
    else:
        u = embed_folded(received, code.q0) if kind == "ael" else embed_word(received, q)
        gamma = sb + q / (q - 1) * eps
        eps2 = 2 * eps * sb
    if gamma >= 1:
        raise ValueError(f"eps too large: gamma = {gamma:.6g} >= 1")
    return CoveringSetup(kind, q, delta, eps, jp.beta, u, gamma, eps2, J - eps, groups)


def verify_cover(
    pe_vec: np.ndarray, codeword_vecs: Sequence[np.ndarray], u: np.ndarray, gamma: float, tol: float = 1e-6
) -> bool:
    """Every codeword with ``<u, chi(h)> > gamma`` has ``<E~chi, chi(h)> > gamma^2 - tol``."""
    for h in codeword_vecs:
        if float(u @ h) > gamma and float(pe_vec @ h) <= gamma * gamma - tol:
            return False
    return True


def min_norm_cover(F, g, eps: float, tol: float = 1e-10):
    """Norm-minimising point of ``conv(F) ∩ {<x, g> >= eps}``; rows of ``F`` are the points."""
    from .solver import SolverParams, min_norm_product

    F = np.asarray(F, dtype=float)
    res = min_norm_product([F.T], np.asarray(g, dtype=float), eps, SolverParams(tol=tol, max_iters=200_000))
    return F.T @ res.dists[0], res
