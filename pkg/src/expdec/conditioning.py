"""Left-right covariance diagnostics and the conditioning loop."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expander import BipartiteExpander
from .pseudoexp import PROB_FLOOR, DegreeError, PseudoExpectation, _pair_table


@dataclass
class GoodnessReport:
    """``eta_hat = E_{l,r} Cov(Z_{N_L(l)}, Z_{N_R(r)})`` and per-pair values."""

    eta_hat: float
    pair_cov: np.ndarray
    tau: float | None = None

    @property
    def max_pair(self) -> float:
        return float(self.pair_cov.max())

    def to_dict(self) -> dict:
        return {"eta_hat": self.eta_hat, "max_pair": self.max_pair, "tau": self.tau}


@dataclass
class TraceStep:
    vertex: int
    assignment: tuple[int, ...]
    mass: float
    phi: float


@dataclass
class ConditioningTrace:
    """Conditioning steps; ``phi0`` is the unconditioned average left variance."""

    phi0: float
    steps: list[TraceStep] = field(default_factory=list)

    @property
    def phis(self) -> list[float]:
        return [self.phi0] + [s.phi for s in self.steps]

    def monotone(self, tol: float = 1e-9) -> bool:
        p = self.phis
        return all(b <= a + tol for a, b in zip(p, p[1:]))

    def to_dict(self) -> dict:
        return {
            "phi0": self.phi0,
            "steps": [
                {"vertex": s.vertex, "assignment": list(s.assignment), "mass": s.mass, "phi": s.phi}
                for s in self.steps
            ],
        }


@dataclass
class Branch:
    """A conditioned pseudoexpectation with its history."""

    pe: PseudoExpectation
    trace: ConditioningTrace
    report: GoodnessReport
    vertices: tuple[int, ...] = ()
    assignment: tuple[int, ...] = ()
    mass: float = 1.0


def _require(pe: PseudoExpectation, size: int):
    if size > pe.t:
        raise DegreeError(f"need joint distributions on {size} variables, degree is {pe.t}")


def avg_lr_cov(pe: PseudoExpectation, graph: BipartiteExpander, reference: Sequence[int] | None = None) -> GoodnessReport:
    """Average left-right pseudo-covariance over all ``n^2`` pairs.

    With a reference codeword ``h`` also reports
    ``tau = sqrt(E_l E~[X_l]) sqrt(E_r E~[Y_r])`` where ``X_l`` indicates
    disagreement with ``h`` on ``N_L(l)``.
    """
    if pe.t < 2 * graph.d:
        raise DegreeError(f"degree {pe.t} < 2d = {2 * graph.d}")
    n = graph.n
    C = np.zeros((n, n))
    for l, r in itertools.product(range(n), range(n)):
        S, T = graph.left_order[l], graph.right_order[r]
        table, pS, pT = _pair_table(pe, S, T)
        C[l, r] = np.abs(table - np.outer(pS, pT)).sum()
    tau = None
    if reference is not None:
        h = np.asarray(reference)

        def miss(nbr):
            p = pe.joint(nbr)
            idx = 0
            for v in sorted(nbr):
                idx = idx * pe.q + int(h[v])
            return 1.0 - p[idx]

        x = np.mean([miss(nb) for nb in graph.left_order])
        y = np.mean([miss(nb) for nb in graph.right_order])
        tau = float(np.sqrt(max(x, 0.0)) * np.sqrt(max(y, 0.0)))
    return GoodnessReport(float(C.mean()), C, tau)


def _cond_variance(pe: PseudoExpectation, S: Sequence[int], T: Sequence[int], floor: float) -> float:
    """``sum_beta P(T=beta) Var(Z_S | Z_T = beta)`` with pseudo-variance ``sum_a |p - p^2|``."""
    if not T:
        p = pe.joint(S)
        return float(np.abs(p - p * p).sum())
    _require(pe, len(set(S) | set(T)))
    table, _, pT = _pair_table(pe, S, T)
    total = 0.0
    for b in range(len(pT)):
        if pT[b] <= floor:
            continue
        c = table[:, b] / pT[b]
        total += pT[b] * np.abs(c - c * c).sum()
    return float(total)


def variance_potential(
    pe: PseudoExpectation, graph: BipartiteExpander, V: Sequence[int] = (), floor: float = PROB_FLOOR
) -> float:
    """``Phi_{|V|} = E_beta E_l Var(Z_{N_L(l)} | Z_{N_R(V)} = beta)``."""
    T = sorted({e for v in V for e in graph.right_order[v]})
    return float(np.mean([_cond_variance(pe, nb, T, floor) for nb in graph.left_order]))


def phi_k(pe: PseudoExpectation, graph: BipartiteExpander, k: int) -> float:
    """``Phi_k`` averaged over all ``k``-sets of right vertices."""
    vals = [variance_potential(pe, graph, V) for V in itertools.combinations(range(graph.n), k)]
    return float(np.mean(vals))


def _right_scores(pe, graph) -> np.ndarray:
    return avg_lr_cov(pe, graph).pair_cov.mean(axis=0)


def make_eta_good(
    pe: PseudoExpectation,
    graph: BipartiteExpander,
    eta: float,
    k_max: int = 1,
    mode: str = "sample",
    seed: int = 0,
    reference: Sequence[int] | None = None,
    greedy: bool = False,
    floor: float = PROB_FLOOR,
) -> list[Branch]:
    """Condition on right neighborhoods until ``eta_hat <= eta``.

    ``mode='sample'`` follows one seeded path (vertex uniform among unused ones,
    or the highest-covariance vertex with ``greedy``; the assignment drawn
    from the local distribution) and returns a single branch.
    ``mode='exhaustive'`` returns every branch ``(V, beta)`` with ``|V| <= k_max``
    and local probability above ``floor``, including the unconditioned one.
    Conditioning stops early when the degree left would drop below ``2d``.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    d = graph.d
    root_report = avg_lr_cov(pe, graph, reference)
    root = Branch(pe, ConditioningTrace(variance_potential(pe, graph)), root_report)
    if mode == "sample":
        rng = np.random.default_rng(seed)
        cur = root
        for _ in range(k_max):
            if cur.report.eta_hat <= eta or cur.pe.t - 2 * d < 2 * d:
                break
            unused = [r for r in range(graph.n) if r not in cur.vertices]
            if not unused:
                break
            if greedy:
                scores = _right_scores(cur.pe, graph)
                r = max(unused, key=lambda v: (scores[v], -v))
            else:
                r = int(rng.choice(unused))
            nbr = graph.right_order[r]
            p = cur.pe.local_distribution(nbr, clip=True)
            b = int(rng.choice(len(p), p=p))
            beta = _digits(b, pe.q, len(nbr))
            npe = cur.pe.condition(nbr, beta, floor)
            V = cur.vertices + (r,)
            phi = variance_potential(pe, graph, V, floor)
            trace = ConditioningTrace(root.trace.phi0, cur.trace.steps + [TraceStep(r, beta, float(p[b]), phi)])
            cur = Branch(npe, trace, avg_lr_cov(npe, graph, reference), V, cur.assignment + beta, cur.mass * float(p[b]))
        return [cur]
    if mode != "exhaustive":
        raise ValueError(f"unknown mode {mode!r}")
    out = [root]
    for k in range(1, k_max + 1):
        if pe.t - 2 * d * k < 2 * d:
            break
        for V in itertools.combinations(range(graph.n), k):
            T = [e for v in V for e in graph.right_order[v]]
            order = sorted(range(len(T)), key=lambda i: T[i])
            joint = pe.joint(T)
            phis = [variance_potential(pe, graph, V[: j + 1], floor) for j in range(k)]
            for b in np.nonzero(joint > floor)[0]:
                sorted_vals = _digits(int(b), pe.q, len(T))
                vals = [0] * len(T)
                for pos, i in enumerate(order):
                    vals[i] = sorted_vals[pos]
                npe = pe.condition(T, vals, floor)
                steps = []
                for j, v in enumerate(V):
                    prefix = T[: d * (j + 1)]
                    pmass = pe.moment(tuple(sorted(zip(prefix, vals[: d * (j + 1)]))))
                    steps.append(TraceStep(v, tuple(vals[d * j : d * (j + 1)]), pmass, phis[j]))
                trace = ConditioningTrace(root.trace.phi0, steps)
                out.append(Branch(npe, trace, avg_lr_cov(npe, graph, reference), V, tuple(vals), float(joint[b])))
    return out


def _digits(v: int, q: int, k: int) -> tuple[int, ...]:
    out = []
    for _ in range(k):
        v, r = divmod(v, q)
        out.append(r)
    return tuple(reversed(out))
