"""Bipartite d-regular graphs with a measured second singular value."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

LAMBDA_TOL = 1e-10
LAMBDA_MAX_ITERS = 100_000
RANDOM_RETRY_CAP = 10_000


class NonConvergence(RuntimeError):
    """An iterative routine hit its iteration cap."""


@dataclass
class BipartiteExpander:
    """``n x n`` bipartite d-regular graph with numbered edges.

    ``edges[e] = (l, r)``.  ``left_order[l]`` lists the edges at ``l`` in the
    order that defines the local view ``N_L(l)``; ``right_order`` likewise.
    ``lam`` is the normalised second singular value, measured on construction.
    """

    n: int
    d: int
    edges: list[tuple[int, int]]
    left_order: list[list[int]]
    right_order: list[list[int]]
    lam: float = field(default=float("nan"))
    lam_residual: float = field(default=float("nan"))

    def __post_init__(self):
        self.edges = [(int(a), int(b)) for a, b in self.edges]
        self.left_order = [[int(e) for e in row] for row in self.left_order]
        self.right_order = [[int(e) for e in row] for row in self.right_order]
        self.validate()
        if np.isnan(self.lam):
            self.lam, self.lam_residual = second_singular_value(self)

    @property
    def m(self) -> int:
        return len(self.edges)

    def validate(self) -> None:
        n, d = self.n, self.d
        if len(self.edges) != n * d:
            raise ValueError(f"expected {n * d} edges, got {len(self.edges)}")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("multi-edges are not supported")
        for side, order, idx in (("left", self.left_order, 0), ("right", self.right_order, 1)):
            if len(order) != n:
                raise ValueError(f"{side}_order must have {n} rows")
            seen = sorted(e for row in order for e in row)
            if seen != list(range(n * d)):
                raise ValueError(f"{side}_order is not a partition of the edges")
            for v, row in enumerate(order):
                if len(row) != d or any(self.edges[e][idx] != v for e in row):
                    raise ValueError(f"{side}_order[{v}] does not list the edges at {v}")

    def biadjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for l, r in self.edges:
            A[l, r] += 1
        return A

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "edges": [list(e) for e in self.edges],
            "left_order": self.left_order,
            "right_order": self.right_order,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BipartiteExpander":
        return cls(data["n"], data["d"], data["edges"], data["left_order"], data["right_order"])

    @classmethod
    def from_edges(cls, n: int, d: int, edges) -> "BipartiteExpander":
        """Build with edges sorted by ``(l, r)`` and local views in edge order."""
        edges = sorted((int(a), int(b)) for a, b in edges)
        left = [[] for _ in range(n)]
        right = [[] for _ in range(n)]
        for e, (l, r) in enumerate(edges):
            left[l].append(e)
            right[r].append(e)
        return cls(n, d, edges, left, right)


def second_singular_value(
    graph: BipartiteExpander, tol: float = LAMBDA_TOL, max_iters: int = LAMBDA_MAX_ITERS
) -> tuple[float, float]:
    """Second singular value of the normalised biadjacency matrix.

    Power iteration on ``A`` with the constant vectors deflated.  Returns the
    estimate and the residual ``max(|Av - s u|, |A^T u - s v|)``, which bounds
    the distance from the estimate to a true singular value.  Estimates below
    ``tol`` are reported as exactly zero.
    """
    n, d = graph.n, graph.d
    L = np.array([l for l, _ in graph.edges])
    R = np.array([r for _, r in graph.edges])

    def A(v):
        return np.bincount(L, weights=v[R], minlength=n) / d

    def At(u):
        return np.bincount(R, weights=u[L], minlength=n) / d

    if n == 1:
        return 0.0, 0.0
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v -= v.mean()
    v /= np.linalg.norm(v)
    sigma, resid = 0.0, np.inf
    for it in range(max_iters):
        u = A(v)
        u -= u.mean()
        s = np.linalg.norm(u)
        if s < tol:
            return 0.0, float(s)
        u /= s
        w = At(u)
        w -= w.mean()
        sigma = float(u @ A(v))
        resid = max(np.linalg.norm(A(v) - sigma * u), np.linalg.norm(w - sigma * v))
        if resid <= tol * max(1.0, sigma):
            break
        nv = np.linalg.norm(w)
        if nv < tol:
            return 0.0, float(nv)
        v = w / nv
    else:
        raise NonConvergence(f"power iteration did not converge (residual {resid:.3g})")
    log.debug("lambda=%.12g after %d iterations, residual %.3g", sigma, it + 1, resid)
    if sigma < tol:
        sigma = 0.0
    return min(sigma, 1.0), float(resid)


def build_graph(
    kind: str, n: int = 0, d: int = 0, seed: int | None = None, path: str | Path | None = None
) -> BipartiteExpander:
    """Construct a bipartite graph.

    kind is one of ``complete`` (requires ``d == n``), ``cycle`` (circulant with
    offsets ``0..d-1``; ``d = 2`` gives the ``2n``-cycle) or ``random_regular``
    (union of ``d`` seeded random perfect matchings, retried until simple).
    ``from_file`` reads the graph JSON at ``path``.
    """
    if kind == "from_file":
        if path is None:
            raise ValueError("from_file requires a path")
        return load_graph(path)
    if n < 1 or d < 1 or d > n:
        raise ValueError(f"need 1 <= d <= n, got n={n}, d={d}")
    if kind == "complete":
        if d != n:
            raise ValueError("complete graph requires d == n")
        edges = [(l, r) for l in range(n) for r in range(n)]
    elif kind == "cycle":
        edges = [(l, (l + j) % n) for l in range(n) for j in range(d)]
    elif kind == "random_regular":
        # matchings are drawn one at a time; a matching that repeats an
        # existing edge is redrawn
        rng = np.random.default_rng(seed)
        taken: set[tuple[int, int]] = set()
        for _ in range(d):
            for _ in range(RANDOM_RETRY_CAP):
                match = [(l, int(r)) for l, r in enumerate(rng.permutation(n))]
                if taken.isdisjoint(match):
                    taken.update(match)
                    break
            else:
                raise RuntimeError("could not sample a simple regular graph")
        edges = list(taken)
    else:
        raise ValueError(f"unknown graph kind {kind!r}")
    return BipartiteExpander.from_edges(n, d, edges)


def load_graph(path: str | Path) -> BipartiteExpander:
    return BipartiteExpander.from_dict(json.loads(Path(path).read_text()))


def eml_residual(graph: BipartiteExpander, f, h) -> float:
    """``|E_{l~r} f(l) h(r) - E f E h|`` for vertex functions ``f`` on L and ``h`` on R."""
    f, h = np.asarray(f, dtype=float), np.asarray(h, dtype=float)
    L = np.array([l for l, _ in graph.edges])
    R = np.array([r for _, r in graph.edges])
    return float(abs(np.mean(f[L] * h[R]) - f.mean() * h.mean()))


def eml_bound(graph: BipartiteExpander, f, h) -> float:
    """Right-hand side ``lam * |f| |h|`` of the mixing lemma (expectation norms)."""
    f, h = np.asarray(f, dtype=float), np.asarray(h, dtype=float)
    return float(graph.lam * np.sqrt(np.mean(f * f) * np.mean(h * h)))
