"""Pseudoexpectations over partial assignments.

A pseudoexpectation of degree ``t`` on ``m`` variables over ``[q]`` assigns a
value to every indicator ``Z_{S,alpha}`` (``S`` a set of variables,
``alpha in [q]^S``) with ``|S| <= t``.  Every implementation here exposes the
values through :meth:`PseudoExpectation.joint`, the vector of
``E~[Z_{S,alpha}]`` over all ``alpha`` in lexicographic order.  Consistency
(each entry of the moment matrix depends only on the merged assignment) is
therefore structural except for :class:`MatrixPE`, which wraps an arbitrary
matrix.

Assignments are tuples of ``(variable, symbol)`` pairs sorted by variable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .algebra import BudgetExceeded, LinearCode

Assignment = tuple  # tuple[tuple[int, int], ...]

BASIS_BUDGET = 20_000
PSD_TOL = 1e-8
PROB_FLOOR = 1e-9


class ConditioningError(ValueError):
    """Conditioning on an event of (near) zero pseudo-probability."""


class DegreeError(ValueError):
    """A query needs more degree than the pseudoexpectation has."""


def make_assignment(S: Sequence[int], alpha: Sequence[int]) -> Assignment:
    if len(S) != len(alpha):
        raise ValueError("S and alpha have different lengths")
    a = dict(zip((int(v) for v in S), (int(x) for x in alpha)))
    if len(a) != len(S):
        raise ValueError("repeated variable in S")
    return tuple(sorted(a.items()))


def merge(a: Assignment, b: Assignment) -> Assignment | None:
    """Union of two partial assignments, None when they disagree."""
    out = dict(a)
    for v, s in b:
        if out.setdefault(v, s) != s:
            return None
    return tuple(sorted(out.items()))


def subsets_upto(m: int, k: int) -> Iterable[tuple[int, ...]]:
    """Subsets of ``range(m)`` of size ``<= k``, by size then lexicographic."""
    for s in range(min(k, m) + 1):
        yield from itertools.combinations(range(m), s)


def _pos_index(alpha: Sequence[int], q: int) -> int:
    v = 0
    for a in alpha:
        v = v * q + a
    return v


class AssignmentBasis:
    """Partial assignments ``(S, alpha)`` with ``|S| <= t/2`` in canonical order."""

    def __init__(self, m: int, q: int, t: int, budget: int = BASIS_BUDGET):
        if t < 0 or t % 2:
            raise ValueError(f"degree must be even and nonnegative, got {t}")
        size = basis_size(m, q, t)
        if size > budget:
            raise BudgetExceeded(f"basis size {size} exceeds budget {budget}")
        self.m, self.q, self.t = m, q, t
        self.elements: list[Assignment] = [
            tuple(zip(S, alpha))
            for S in subsets_upto(m, t // 2)
            for alpha in itertools.product(range(q), repeat=len(S))
        ]
        self.index = {a: i for i, a in enumerate(self.elements)}

    def __len__(self) -> int:
        return len(self.elements)


def basis_size(m: int, q: int, t: int) -> int:
    return sum(math.comb(m, k) * q**k for k in range(min(t // 2, m) + 1))


def basis_build(m: int, q: int, t: int, budget: int = BASIS_BUDGET) -> AssignmentBasis:
    return AssignmentBasis(m, q, t, budget)


class PseudoExpectation:
    """Base class; subclasses implement :meth:`_joint`."""

    def __init__(self, m: int, q: int, t: int):
        if t < 0 or t % 2:
            raise ValueError(f"degree must be even and nonnegative, got {t}")
        self.m, self.q, self.t = m, q, t
        self.psd_tol = PSD_TOL
        self._cache: dict[tuple[int, ...], np.ndarray] = {}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(m={self.m}, q={self.q}, t={self.t})"

    # -- queries -----------------------------------------------------------

    def joint(self, S: Sequence[int]) -> np.ndarray:
        """``E~[Z_{S,alpha}]`` for all ``alpha`` (lexicographic), ``|S| <= t``."""
        S = tuple(sorted(int(v) for v in S))
        if len(set(S)) != len(S) or (S and (S[0] < 0 or S[-1] >= self.m)):
            raise ValueError(f"invalid variable set {S}")
        if len(S) > self.t:
            raise DegreeError(f"|S| = {len(S)} exceeds degree {self.t}")
        out = self._cache.get(S)
        if out is None:
            out = np.asarray(self._joint(S), dtype=float)
            out.setflags(write=False)
            self._cache[S] = out
        return out

    def _joint(self, S: tuple[int, ...]) -> np.ndarray:
        raise NotImplementedError

    def moment(self, a: Assignment) -> float:
        S = tuple(v for v, _ in a)
        return float(self.joint(S)[_pos_index([s for _, s in a], self.q)])

    def local_distribution(self, S: Sequence[int], clip: bool = False) -> np.ndarray:
        """Local distribution on ``S`` (requires ``|S| <= t/2``)."""
        if len(S) > self.t // 2:
            raise DegreeError(f"local distribution needs |S| <= t/2 = {self.t // 2}")
        p = np.array(self.joint(S))
        if clip:
            p = np.clip(p, 0.0, None)
            p /= p.sum()
        return p

    def marginals(self) -> np.ndarray:
        """``m x q`` array of single-variable distributions."""
        return np.array([self.joint((v,)) for v in range(self.m)])

    @cached_property
    def basis(self) -> AssignmentBasis:
        return AssignmentBasis(self.m, self.q, self.t)

    def moment_matrix(self) -> np.ndarray:
        """Full moment matrix over :attr:`basis`."""
        B = self.basis.elements
        M = np.zeros((len(B), len(B)))
        for i, a in enumerate(B):
            for j in range(i, len(B)):
                c = merge(a, B[j])
                if c is not None:
                    M[i, j] = M[j, i] = self.moment(c)
        return M

    def psd_matrix(self) -> np.ndarray:
        """A matrix that is PSD iff the moment matrix is.

        Default: the moment matrix restricted to assignments avoiding symbol 0.
        Every indicator is a combination of those via ``Z_{i,0} = 1 - sum_j Z_{i,j}``.
        """
        rows = [
            tuple(zip(S, alpha))
            for S in subsets_upto(self.m, self.t // 2)
            for alpha in itertools.product(range(1, self.q), repeat=len(S))
        ]
        M = np.zeros((len(rows), len(rows)))
        for i, a in enumerate(rows):
            for j in range(i, len(rows)):
                c = merge(a, rows[j])
                if c is not None:
                    M[i, j] = M[j, i] = self.moment(c)
        return M

    def consistency_residual(self) -> float:
        return 0.0

    def condition(self, S: Sequence[int], alpha: Sequence[int], floor: float = PROB_FLOOR) -> "ConditionedPE":
        return ConditionedPE(self, make_assignment(S, alpha), floor)


class MixturePE(PseudoExpectation):
    """Expectation under a distribution over words (a true distribution)."""

    def __init__(self, words, weights=None, q: int | None = None, t: int | None = None):
        W = np.atleast_2d(np.asarray(words, dtype=np.int64))
        if W.size == 0:
            raise ValueError("need at least one word")
        w = np.full(len(W), 1.0 / len(W)) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (len(W),):
            raise ValueError("weights must match the number of words")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be a probability vector")
        q = int(W.max()) + 1 if q is None else q
        if W.min() < 0 or W.max() >= q:
            raise ValueError("symbols outside the alphabet")
        m = W.shape[1]
        super().__init__(m, max(q, 2), t if t is not None else m + m % 2)
        self.words, self.weights = W, w

    def _joint(self, S):
        if not S:
            return np.array([self.weights.sum()])
        idx = self.words[:, list(S)] @ (self.q ** np.arange(len(S) - 1, -1, -1))
        return np.bincount(idx, weights=self.weights, minlength=self.q ** len(S))

    def psd_matrix(self):
        rows = [
            (S, alpha)
            for S in subsets_upto(self.m, self.t // 2)
            for alpha in itertools.product(range(1, self.q), repeat=len(S))
        ]
        Phi = np.stack([np.all(self.words[:, list(S)] == alpha, axis=1) for S, alpha in rows], axis=1)
        Phi = Phi.astype(float)
        return (Phi * self.weights[:, None]).T @ Phi


def pe_from_mixture(words, weights=None, q: int | None = None, t: int | None = None) -> MixturePE:
    return MixturePE(words, weights, q, t)


class ProductPE(PseudoExpectation):
    """Independent coordinates with the given ``m x q`` marginals."""

    def __init__(self, marginals, t: int | None = None):
        P = np.asarray(marginals, dtype=float)
        if np.any(P < -1e-12) or np.any(np.abs(P.sum(1) - 1) > 1e-9):
            raise ValueError("each row must be a distribution")
        m, q = P.shape
        super().__init__(m, q, t if t is not None else m + m % 2)
        self.P = P

    def _joint(self, S):
        out = np.ones(1)
        for v in S:
            out = np.kron(out, self.P[v])
        return out


class MatrixPE(PseudoExpectation):
    """Wraps an explicit moment matrix over a basis (for axiom checks)."""

    def __init__(self, basis: AssignmentBasis, M):
        super().__init__(basis.m, basis.q, basis.t)
        M = np.asarray(M, dtype=float)
        if M.shape != (len(basis), len(basis)):
            raise ValueError("matrix does not match the basis")
        self._basis, self.M = basis, M

    @property
    def basis(self):
        return self._basis

    def _joint(self, S):
        h = min(len(S), self.t // 2)
        S1, S2 = S[:h], S[h:]
        idx = self._basis.index
        out = np.empty(self.q ** len(S))
        for i, alpha in enumerate(itertools.product(range(self.q), repeat=len(S))):
            a1 = tuple(zip(S1, alpha[:h]))
            a2 = tuple(zip(S2, alpha[h:]))
            out[i] = self.M[idx[a1], idx[a2]]
        return out

    def moment_matrix(self):
        return self.M

    def psd_matrix(self):
        return self.M

    def consistency_residual(self) -> float:
        """Max spread of entries sharing a merged assignment (inconsistent pairs should be 0)."""
        B = self._basis.elements
        groups: dict[Assignment, list[float]] = {}
        worst = 0.0
        for i, a in enumerate(B):
            for j, b in enumerate(B):
                c = merge(a, b)
                if c is None:
                    worst = max(worst, abs(self.M[i, j]))
                else:
                    groups.setdefault(c, []).append(self.M[i, j])
        for vals in groups.values():
            worst = max(worst, max(vals) - min(vals))
        return float(worst)


class ConditionedPE(PseudoExpectation):
    """``E~[p | Z_{S,alpha}] = E~[p Z_{S,alpha}] / E~[Z_{S,alpha}]`` with degree ``t - 2|S|``."""

    def __init__(self, parent: PseudoExpectation, cond: Assignment, floor: float = PROB_FLOOR):
        t = parent.t - 2 * len(cond)
        if t < 0:
            raise DegreeError(f"conditioning on {len(cond)} variables needs degree >= {2 * len(cond)}")
        prob = parent.moment(cond)
        if not prob > floor:
            raise ConditioningError(f"event has pseudo-probability {prob:.3g} <= {floor:g}")
        super().__init__(parent.m, parent.q, t)
        self.parent, self.cond, self.prob = parent, cond, prob
        self._cond = dict(cond)

    def _joint(self, S):
        K = tuple(sorted(set(S) | set(self._cond)))
        P = np.array(self.parent.joint(K)).reshape((self.q,) * len(K))
        index = []
        for v in K:
            if v not in self._cond:
                index.append(slice(None))
            elif v in S:
                sel = np.zeros(self.q, dtype=bool)
                sel[self._cond[v]] = True
                P = P * sel.reshape([-1 if u == v else 1 for u in K])
                index.append(slice(None))
            else:
                index.append(self._cond[v])
        return P[tuple(index)].reshape(-1) / self.prob


def condition(pe: PseudoExpectation, S: Sequence[int], alpha: Sequence[int], floor: float = PROB_FLOOR):
    return pe.condition(S, alpha, floor)


def local_distribution(pe: PseudoExpectation, S: Sequence[int], clip: bool = False) -> np.ndarray:
    return pe.local_distribution(S, clip)


def _pair_table(pe: PseudoExpectation, S: Sequence[int], T: Sequence[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Joint table ``E~[Z_{S,a} Z_{T,b}]`` and the two marginals."""
    S, T = tuple(sorted(S)), tuple(sorted(T))
    U = tuple(sorted(set(S) | set(T)))
    if len(U) > pe.t:
        raise DegreeError(f"|S u T| = {len(U)} exceeds degree {pe.t}")
    q = pe.q
    J = pe.joint(U)
    codes = np.indices((q,) * len(U)).reshape(len(U), -1)
    pos = {v: i for i, v in enumerate(U)}
    wS = q ** np.arange(len(S) - 1, -1, -1)
    wT = q ** np.arange(len(T) - 1, -1, -1)
    ia = (codes[[pos[v] for v in S]].T @ wS) if S else np.zeros(len(J), dtype=int)
    ib = (codes[[pos[v] for v in T]].T @ wT) if T else np.zeros(len(J), dtype=int)
    table = np.zeros((q ** len(S), q ** len(T)))
    np.add.at(table, (ia, ib), J)
    return table, pe.joint(S), pe.joint(T)


def pseudo_cov(pe: PseudoExpectation, S: Sequence[int], T: Sequence[int]) -> float:
    """``sum_{a,b} |E~[Z_{S,a} Z_{T,b}] - E~[Z_{S,a}] E~[Z_{T,b}]|``."""
    table, pS, pT = _pair_table(pe, S, T)
    return float(np.abs(table - np.outer(pS, pT)).sum())


def pseudo_var(pe: PseudoExpectation, S: Sequence[int]) -> float:
    """``sum_a |E~[Z_{S,a}] - E~[Z_{S,a}]^2|``."""
    p = pe.joint(S)
    return float(np.abs(p - p * p).sum())


# -- code constraints -----------------------------------------------------------


@dataclass
class ConstraintSet:
    """Forced zeros of a Tanner or AEL pseudocodeword.

    For each constrained neighborhood ``N`` (all of them for Tanner, left ones
    for AEL) the moment of an assignment ``kappa`` is forced to zero when
    ``kappa`` is total on ``N`` with a non-codeword there, or, with
    ``strengthen``, when ``kappa`` restricted to ``N`` has no completion in the
    inner code.  Each forced zero is one homogeneous linear equality
    ``E~[Z_kappa] = 0``; PSD and ``E~[1] = 1`` complete the program.
    """

    m: int
    q: int
    t: int
    neighborhoods: list[tuple[int, ...]]
    inner: LinearCode
    strengthen: bool = True
    kind: str = "tanner"
    _patterns: dict = field(default_factory=dict, repr=False)

    @cached_property
    def _inner_words(self) -> np.ndarray:
        return self.inner.codeword_array()

    @cached_property
    def _var_nbrs(self) -> list[list[tuple[int, int]]]:
        """For each variable the (neighborhood index, local position) pairs."""
        out: list[list[tuple[int, int]]] = [[] for _ in range(self.m)]
        for i, nbr in enumerate(self.neighborhoods):
            for p, v in enumerate(nbr):
                out[v].append((i, p))
        return out

    def completable(self, positions: tuple[int, ...], values: tuple[int, ...]) -> bool:
        pats = self._patterns.get(positions)
        if pats is None:
            pats = {tuple(int(x) for x in r) for r in self._inner_words[:, list(positions)]}
            self._patterns[positions] = pats
        return values in pats

    def forbids(self, a: Assignment) -> bool:
        local: dict[int, list[tuple[int, int]]] = {}
        for v, s in a:
            for i, p in self._var_nbrs[v]:
                local.setdefault(i, []).append((p, s))
        d = self.inner.n
        for i, items in local.items():
            if not self.strengthen and len(items) < d:
                continue
            items.sort()
            if not self.completable(tuple(p for p, _ in items), tuple(s for _, s in items)):
                return True
        return False

    def forbidden_mask(self, S: tuple[int, ...]) -> np.ndarray:
        """Boolean vector over ``[q]^S`` marking forced-zero assignments."""
        alphas = itertools.product(range(self.q), repeat=len(S))
        return np.array([self.forbids(tuple(zip(S, al))) for al in alphas], dtype=bool)

    def iter_forced_zero(self, max_size: int | None = None) -> Iterable[Assignment]:
        k = self.t if max_size is None else max_size
        for S in subsets_upto(self.m, k):
            for al in itertools.product(range(self.q), repeat=len(S)):
                a = tuple(zip(S, al))
                if self.forbids(a):
                    yield a

    def residual(self, pe: PseudoExpectation, budget: int = 5000, seed: int = 0) -> tuple[float, int]:
        """Max ``|E~[Z_kappa]|`` over forced-zero ``kappa``; returns (residual, subsets checked).

        All subsets of size ``<= t`` when there are at most ``budget`` of them;
        otherwise every neighborhood and its subsets plus a seeded sample.
        """
        total = sum(math.comb(self.m, k) for k in range(min(self.t, pe.t, self.m) + 1))
        tmax = min(self.t, pe.t)
        if total <= budget:
            subsets = list(subsets_upto(self.m, tmax))
        else:
            chosen = set()
            for nbr in self.neighborhoods:
                for k in range(1, min(len(nbr), tmax) + 1):
                    chosen.update(tuple(sorted(c)) for c in itertools.combinations(nbr, k))
            rng = np.random.default_rng(seed)
            while len(chosen) < budget:
                k = int(rng.integers(1, tmax + 1))
                chosen.add(tuple(sorted(int(x) for x in rng.choice(self.m, k, replace=False))))
            subsets = sorted(chosen, key=lambda s: (len(s), s))
        worst = 0.0
        for S in subsets:
            mask = self.forbidden_mask(S)
            if mask.any():
                worst = max(worst, float(np.abs(pe.joint(S)[mask]).max()))
        return worst, len(subsets)


def compile_constraints(code, t: int, strengthen: bool = True) -> ConstraintSet:
    """Constraint set of degree-``t`` Tanner or AEL pseudocodewords."""
    from .graph_codes import AELCode, TannerCode

    if isinstance(code, TannerCode):
        nbrs, kind = code.neighborhoods(), "tanner"
    elif isinstance(code, AELCode):
        nbrs, kind = code.graph.left_order, "ael"
    else:
        raise TypeError(f"cannot compile constraints for {type(code).__name__}")
    d = code.graph.d
    if t < 2 * d or t % 2:
        raise DegreeError(f"degree t={t} must be even and >= 2d = {2 * d}")
    cs = ConstraintSet(code.m, code.inner.q, t, [tuple(n) for n in nbrs], code.inner, strengthen, kind)
    if cs.forbids(tuple((v, 0) for v in range(min(code.m, t)))):
        raise ValueError("constraint set excludes the zero codeword")  # pragma: no cover
    return cs


# -- axioms ----------------------------------------------------------------------


@dataclass
class AxiomReport:
    unit: float
    psd_min_eig: float
    psd_trace: float
    consistency: float
    marginalization: float
    range_violation: float
    constraint: float
    tol: float
    subsets_checked: int = 0

    @property
    def psd_ok(self) -> bool:
        return self.psd_min_eig >= -self.tol * max(self.psd_trace, 1.0)

    @property
    def passed(self) -> bool:
        return (
            self.unit <= self.tol
            and self.psd_ok
            and self.consistency <= self.tol
            and self.marginalization <= self.tol
            and self.range_violation <= self.tol
            and self.constraint <= self.tol
        )

    def failures(self) -> list[str]:
        out = []
        if self.unit > self.tol:
            out.append(f"unit {self.unit:.3g}")
        if not self.psd_ok:
            out.append(f"psd min eigenvalue {self.psd_min_eig:.3g}")
        for name in ("consistency", "marginalization", "range_violation", "constraint"):
            if getattr(self, name) > self.tol:
                out.append(f"{name} {getattr(self, name):.3g}")
        return out


def check_axioms(
    pe: PseudoExpectation, tol: float = PSD_TOL, constraints: ConstraintSet | None = None, budget: int = 5000
) -> AxiomReport:
    """Unit, PSD, consistency, marginalization, range and constraint residuals."""
    unit = abs(pe.moment(()) - 1.0)
    P = pe.psd_matrix()
    eig = np.linalg.eigvalsh((P + P.T) / 2) if P.size else np.zeros(1)
    marg = 0.0
    rng_bad = 0.0
    for S in subsets_upto(pe.m, pe.t // 2):
        p = pe.joint(S)
        rng_bad = max(rng_bad, float(max(-p.min(), p.max() - 1.0, 0.0)))
        if len(S) + 1 > pe.t // 2:
            continue
        for i in range(pe.m):
            if i in S:
                continue
            U = tuple(sorted(S + (i,)))
            J = pe.joint(U).reshape((pe.q,) * len(U))
            marg = max(marg, float(np.abs(J.sum(axis=U.index(i)).reshape(-1) - p).max()))
    cres, nsub = (0.0, 0) if constraints is None else constraints.residual(pe, budget)
    return AxiomReport(
        unit=unit,
        psd_min_eig=float(eig.min()),
        psd_trace=float(np.trace(P)),
        consistency=pe.consistency_residual(),
        marginalization=marg,
        range_violation=rng_bad,
        constraint=cres,
        tol=tol,
        subsets_checked=nsub,
    )
