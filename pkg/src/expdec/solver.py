"""Convex solvers for the covering programs.

``solve_moment_sdp`` minimises ``Psi = |E~[chi(Z)]|^2`` over pseudocodewords
subject to ``<E~[chi(Z)], u> >= gamma``.  The linear constraints are
eliminated by a parametrisation of the moments (a *moment space*) and the
remaining PSD constraint is handled by ADMM:

* :class:`FourierSpace` (binary alphabet) works with the Fourier moments
  ``y(U) = E~[prod_{e in U} (-1)^{Z_e}]``.  A forced zero for a local
  constraint on neighborhood ``N`` is equivalent to ``y(U) = y(U ^ a)`` for
  every nonzero dual codeword ``a`` supported on ``N``, so the feasible
  moments are constant on classes and the PSD block only needs one row per
  class of ``|S| <= t/2`` sets.  This is an exact reformulation.
* :class:`GenericSpace` (any alphabet, tiny instances) parametrises the
  indicator moments that avoid symbol 0 over the nullspace of the forced zeros.

Infeasibility is certified with a dual bound: for any PSD ``Y`` the margin of
every feasible point is at most ``g0 + <Y, B0> + sum_i |g_i + <Y, B_i>| |z_i|``
with ``|z_i|`` bounded a priori.

``solve_product_qp`` is the projected-gradient QP over product distributions
used for concatenated codes.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.optimize

from .algebra import LinearCode
from .expander import NonConvergence
from .pseudoexp import ConstraintSet, PseudoExpectation, subsets_upto

log = logging.getLogger(__name__)

FOURIER_MAX_VARS = 22
GENERIC_MAX_KEYS = 4000


class Infeasible(ValueError):
    """The margin constraint cannot be met."""

    def __init__(self, msg: str, bound: float = float("nan")):
        super().__init__(msg)
        self.bound = bound


@dataclass
class SolverParams:
    max_iters: int = 50_000
    tol: float = 1e-6
    rho: float = 1.0
    adapt_every: int = 50
    certify_every: int = 25
    seed: int = 0
    trace_path: str | None = None
    trace_every: int = 10


@dataclass
class SolverStats:
    status: str
    iterations: int
    primal_residual: float
    dual_residual: float
    psi: float
    margin: float
    psd_min_eig: float


# -- moment spaces ---------------------------------------------------------------


def _hadamard(k: int) -> np.ndarray:
    H = np.ones((1, 1))
    for _ in range(k):
        H = np.block([[H, H], [H, -H]])
    return H


def _union_find(a: np.ndarray, b: np.ndarray, lab: np.ndarray) -> np.ndarray:
    """Merge labels along the pairs ``(a[i], b[i])`` to a fixpoint (min label wins)."""
    while True:
        lo = np.minimum(lab[a], lab[b])
        new = lab.copy()
        np.minimum.at(new, a, lo)
        np.minimum.at(new, b, lo)
        new = new[new]
        if np.array_equal(new, lab):
            return lab
        lab = new


class MomentSpace:
    """Affine parametrisation ``z -> moments`` plus the PSD block ``W(z) = B0 + sum z_i B_i``."""

    n_free: int
    psd_size: int
    z_bound: tuple[str, float]

    def W(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def Wt(self, Y: np.ndarray) -> np.ndarray:
        """Adjoint of the linear part of ``W``."""
        raise NotImplementedError

    def W0(self) -> np.ndarray:
        return self.W(np.zeros(self.n_free))

    def gram(self) -> np.ndarray:
        raise NotImplementedError

    def joint_affine(self, S: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def joint(self, z: np.ndarray, S: tuple[int, ...]) -> np.ndarray:
        A, b = self.joint_affine(S)
        return A @ z + b


class FourierSpace(MomentSpace):
    """Binary moments in the Fourier basis with dual-code coset classes."""

    def __init__(self, cs: ConstraintSet):
        if cs.q != 2:
            raise ValueError("FourierSpace needs a binary alphabet")
        if cs.m > FOURIER_MAX_VARS:
            raise ValueError(f"{cs.m} variables exceed the Fourier backend limit {FOURIER_MAX_VARS}")
        m, t = cs.m, cs.t
        self.m, self.t = m, t
        N = 1 << m
        pc = np.array([bin(x).count("1") for x in range(N)])
        masks = np.nonzero(pc <= t)[0]
        rows = masks[pc[masks] <= t // 2]
        H0 = cs.inner.paritycheck
        duals = []
        if H0.size:
            dual = LinearCode(cs.inner.field, H0)
            local = [c for c in dual.codewords() if any(c)]
            for nbr in cs.neighborhoods:
                nmask = sum(1 << v for v in nbr)
                for c in local:
                    duals.append((sum(1 << v for v, bit in zip(nbr, c) if bit), nmask))
        A, B = [], []
        for a, nmask in duals:
            ok = pc[masks | (nmask if not cs.strengthen else a)] <= t
            A.append(masks[ok])
            B.append(masks[ok] ^ a)
        A = np.concatenate(A) if A else np.zeros(0, dtype=int)
        B = np.concatenate(B) if B else np.zeros(0, dtype=int)
        ra, rb = [], []
        for a, _ in duals:
            ok = pc[rows ^ a] <= t // 2
            ra.append(rows[ok])
            rb.append(rows[ok] ^ a)
        rlab = np.arange(N)
        if ra:
            rlab = _union_find(np.concatenate(ra), np.concatenate(rb), rlab)
        reps = np.unique(rlab[rows])
        lab = np.arange(N)
        X = (rows[:, None] ^ rows[None, :]).ravel()
        Y = (rlab[rows][:, None] ^ rlab[rows][None, :]).ravel()
        while True:
            lab = _union_find(A, B, lab)
            before = len(np.unique(lab[masks]))
            lab = _union_find(np.concatenate([A, X]), np.concatenate([B, Y]), lab)
            if len(np.unique(lab[masks])) == before:
                break
        classes = np.unique(lab[masks])
        cid = -np.ones(N, dtype=np.int64)
        cid[classes] = np.arange(len(classes))
        self.classid = np.where(pc <= t, cid[lab], -1)
        assert self.classid[0] == 0
        self.reps = reps
        self.W_idx = self.classid[reps[:, None] ^ reps[None, :]]
        self.n_classes = len(classes)
        self.n_free = self.n_classes - 1
        self.psd_size = len(reps)
        self.z_bound = ("linf", 1.0)
        self._counts = np.bincount(self.W_idx.ravel(), minlength=self.n_classes).astype(float)
        self._flat = self.W_idx.ravel()
        log.debug("Fourier space: %d classes, PSD block %d", self.n_classes, self.psd_size)

    def full(self, z):
        return np.concatenate([[1.0], z])

    def W(self, z):
        return self.full(z)[self.W_idx]

    def Wt(self, Y):
        return np.bincount(self._flat, weights=Y.ravel(), minlength=self.n_classes)[1:]

    def gram(self):
        return np.diag(self._counts[1:])

    def fourier(self, z, U: int) -> float:
        return float(self.full(z)[self.classid[U]])

    def joint_affine(self, S):
        k = len(S)
        bits = [1 << v for v in S]
        Wmasks = np.array(
            [sum(bits[j] for j in range(k) if (w >> (k - 1 - j)) & 1) for w in range(1 << k)], dtype=np.int64
        )
        cls = self.classid[Wmasks]
        onehot = np.zeros((1 << k, self.n_classes))
        onehot[np.arange(1 << k), cls] = 1.0
        M = _hadamard(k) @ onehot / (1 << k)
        return M[:, 1:], M[:, 0]

    def joint(self, z, S):
        k = len(S)
        bits = [1 << v for v in S]
        Wmasks = np.array(
            [sum(bits[j] for j in range(k) if (w >> (k - 1 - j)) & 1) for w in range(1 << k)], dtype=np.int64
        )
        y = self.full(z)[self.classid[Wmasks]]
        return _hadamard(k) @ y / (1 << k)


class GenericSpace(MomentSpace):
    """Indicator moments avoiding symbol 0, restricted to the nullspace of the forced zeros."""

    def __init__(self, cs: ConstraintSet):
        m, q, t = cs.m, cs.q, cs.t
        self.m, self.q, self.t = m, q, t
        keys = [
            tuple(zip(S, al))
            for S in subsets_upto(m, t)
            for al in itertools.product(range(1, q), repeat=len(S))
        ]
        if len(keys) > GENERIC_MAX_KEYS:
            raise ValueError(f"{len(keys)} moments exceed the generic backend limit {GENERIC_MAX_KEYS}")
        self.keys = keys
        self.kindex = {k: i for i, k in enumerate(keys)}
        rows = []
        for S in subsets_upto(m, t):
            for al in itertools.product(range(q), repeat=len(S)):
                a = tuple(zip(S, al))
                if cs.forbids(a):
                    rows.append(self._expand(a))
        K = len(keys)
        C = np.zeros((len(rows) + 1, K))
        for i, coeffs in enumerate(rows):
            for j, c in coeffs.items():
                C[i, j] += c
        C[-1, self.kindex[()]] = 1.0
        rhs = np.zeros(len(rows) + 1)
        rhs[-1] = 1.0
        self.y0 = np.linalg.lstsq(C, rhs, rcond=None)[0]
        self.N = scipy.linalg.null_space(C)
        self.n_free = self.N.shape[1]
        prow = [k for k in keys if len(k) <= t // 2]
        self.psd_size = len(prow)
        idx = np.full((len(prow), len(prow)), K, dtype=np.int64)
        for i, a in enumerate(prow):
            for j, b in enumerate(prow):
                merged = dict(a)
                if all(merged.setdefault(v, s) == s for v, s in b):
                    idx[i, j] = self.kindex[tuple(sorted(merged.items()))]
        self.W_idx = idx
        self._flat = idx.ravel()
        counts = np.bincount(self._flat, minlength=K + 1)[:K].astype(float)
        self._gram = self.N.T @ (counts[:, None] * self.N)
        self.z_bound = ("l2", math.sqrt(K) + float(np.linalg.norm(self.y0)))

    def _expand(self, a) -> dict[int, float]:
        """Coefficients over reduced keys of the full moment of assignment ``a``."""
        ones = [(v, s) for v, s in a if s != 0]
        zeros = [v for v, s in a if s == 0]
        out: dict[int, float] = {}
        for r in range(len(zeros) + 1):
            for T in itertools.combinations(zeros, r):
                for beta in itertools.product(range(1, self.q), repeat=r):
                    key = tuple(sorted(ones + list(zip(T, beta))))
                    j = self.kindex[key]
                    out[j] = out.get(j, 0.0) + (-1.0) ** r
        return out

    def y(self, z):
        return self.y0 + self.N @ z

    def W(self, z):
        return np.concatenate([self.y(z), [0.0]])[self.W_idx]

    def W0(self):
        return np.concatenate([self.y0, [0.0]])[self.W_idx]

    def Wt(self, Y):
        g = np.bincount(self._flat, weights=Y.ravel(), minlength=len(self.keys) + 1)[: len(self.keys)]
        return self.N.T @ g

    def gram(self):
        return self._gram

    def joint_affine(self, S):
        rows = []
        for al in itertools.product(range(self.q), repeat=len(S)):
            coeffs = self._expand(tuple(zip(S, al)))
            r = np.zeros(len(self.keys))
            for j, c in coeffs.items():
                r[j] += c
            rows.append(r)
        R = np.array(rows)
        return R @ self.N, R @ self.y0


def moment_space(cs: ConstraintSet, backend: str = "auto") -> MomentSpace:
    """Moment space for ``cs``, cached on the constraint set."""
    if backend == "auto":
        backend = "fourier" if cs.q == 2 else "generic"
    cache = cs.__dict__.setdefault("_spaces", {})
    if backend not in cache:
        cache[backend] = {"fourier": FourierSpace, "generic": GenericSpace}[backend](cs)
    return cache[backend]


class SolverPE(PseudoExpectation):
    """Pseudoexpectation given by a point of a moment space."""

    def __init__(self, space: MomentSpace, z: np.ndarray, q: int, stats: SolverStats | None = None):
        super().__init__(space.m, q, space.t)
        self.space, self.z, self.stats = space, np.asarray(z, dtype=float), stats

    def _joint(self, S):
        return self.space.joint(self.z, S)

    def psd_matrix(self):
        return self.space.W(self.z)


# -- covering objective ----------------------------------------------------------


@dataclass
class CoveringObjective:
    """Target ``u``, margin ``gamma`` and the embedding of the pseudoexpectation.

    ``kind='edge'`` embeds each variable with ``chi_q``; ``kind='folded'``
    embeds each neighborhood in ``groups`` with ``chi_{q^d}``.  Both are scaled
    so that embedded words have unit norm.
    """

    u: np.ndarray
    gamma: float
    kind: str = "edge"
    groups: list[tuple[int, ...]] | None = None

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if abs(np.linalg.norm(self.u) - 1.0) > 1e-12:
            raise ValueError("target vector must have unit norm")
        if self.kind not in ("edge", "folded"):
            raise ValueError(f"unknown embedding kind {self.kind!r}")

    def embedding_affine(self, space: MomentSpace, q: int) -> tuple[np.ndarray, np.ndarray]:
        """``(E, e0)`` with ``E~[chi(Z)] = E z + e0``."""
        from .covering import chi_build, order_rows

        groups = [(v,) for v in range(space.m)] if self.kind == "edge" else [tuple(g) for g in self.groups]
        chi = chi_build(q ** len(groups[0]))
        blocks, offs = [], []
        scale = 1.0 / math.sqrt(len(groups))
        for g in groups:
            A, b = space.joint_affine(g)
            A, b = order_rows(A, g, q), order_rows(b, g, q)
            blocks.append(chi.T @ A * scale)
            offs.append(chi.T @ b * scale)
        E, e0 = np.vstack(blocks), np.concatenate(offs)
        if E.shape[0] != len(self.u):
            raise ValueError(f"target has dimension {len(self.u)}, embedding has {E.shape[0]}")
        return E, e0


def _certificate_bound(space: MomentSpace, Y: np.ndarray, g: np.ndarray, g0: float) -> float:
    """Upper bound on the margin of any feasible point, from a PSD ``Y``."""
    a = float(np.sum(Y * space.W0()))
    b = space.Wt(Y)
    kind, radius = space.z_bound

    def bound(s):
        r = s * b + g
        return g0 + s * a + radius * (np.abs(r).sum() if kind == "linf" else np.linalg.norm(r))

    if kind == "linf":
        cands = [0.0] + [float(s) for s in -g[b != 0] / b[b != 0] if s > 0]
        return min(bound(s) for s in cands)
    res = scipy.optimize.minimize_scalar(bound, bounds=(0.0, 1e6), method="bounded")
    return min(float(res.fun), bound(0.0))


def solve_moment_sdp(
    constraints: ConstraintSet,
    obj: CoveringObjective,
    t: int | None = None,
    params: SolverParams | None = None,
    backend: str = "auto",
) -> SolverPE:
    """Minimise ``Psi`` over degree-``t`` pseudocodewords with margin ``>= gamma``."""
    params = params or SolverParams()
    if t is not None and t != constraints.t:
        raise ValueError(f"constraint set has degree {constraints.t}, requested {t}")
    if obj.gamma > 1.0:
        raise Infeasible(f"margin {obj.gamma:.6g} > 1 is unattainable", 1.0)
    space = moment_space(constraints, backend)
    E, e0 = obj.embedding_affine(space, constraints.q)
    g, g0 = E.T @ obj.u, float(obj.u @ e0)
    gam = obj.gamma
    p, k = space.n_free, space.psd_size
    G = space.gram()
    B0 = space.W0()
    EtE, Ete0 = E.T @ E, E.T @ e0
    rho = params.rho
    tracer = _Tracer(params)

    def factor(rho):
        return scipy.linalg.cho_factor(2 * EtE + rho * G + 1e-12 * np.eye(p))

    fac = factor(rho)
    X, U = np.eye(k), np.zeros((k, k))
    z = np.zeros(p)
    r = s = float("inf")
    status = "max_iters"
    for it in range(1, params.max_iters + 1):
        rhs = -2 * Ete0 + rho * space.Wt(X - U - B0)
        z = scipy.linalg.cho_solve(fac, rhs)
        if g @ z + g0 < gam:
            Hg = scipy.linalg.cho_solve(fac, g)
            z = z + Hg * ((gam - g0 - g @ z) / (g @ Hg))
        Wz = space.W(z)
        w, Q = np.linalg.eigh(Wz + U)
        Xn = (Q * np.maximum(w, 0.0)) @ Q.T
        U = U + Wz - Xn
        r = float(np.linalg.norm(Wz - Xn))
        s = float(rho * np.linalg.norm(space.Wt(Xn - X)))
        X = Xn
        tracer.record(it, r, s, float(np.sum((E @ z + e0) ** 2)))
        if r < params.tol and s < params.tol:
            status = "converged"
            break
        if it % params.certify_every == 0 and gam > -1.0:
            wy, Qy = np.linalg.eigh(-U)
            Y = (Qy * np.maximum(wy, 0.0)) @ Qy.T
            bound = _certificate_bound(space, Y, g, g0)
            if bound < gam - 1e-9:
                tracer.close()
                raise Infeasible(f"margin {gam:.6g} exceeds certified bound {bound:.6g}", bound)
        if it % params.adapt_every == 0:
            if r > 10 * s:
                rho, U = rho * 2, U / 2
                fac = factor(rho)
            elif s > 10 * r:
                rho, U = rho / 2, U * 2
                fac = factor(rho)
    tracer.close()
    v = E @ z + e0
    stats = SolverStats(
        status=status,
        iterations=it,
        primal_residual=r,
        dual_residual=s,
        psi=float(v @ v),
        margin=float(obj.u @ v),
        psd_min_eig=float(np.linalg.eigvalsh(space.W(z)).min()),
    )
    if status != "converged":
        raise NonConvergence(
            f"ADMM hit {params.max_iters} iterations (primal {r:.3g}, dual {s:.3g})"
        )
    log.debug("sdp: %s", stats)
    return SolverPE(space, z, constraints.q, stats)


class _Tracer:
    def __init__(self, params: SolverParams):
        self.every = params.trace_every
        self.fh = None
        if params.trace_path:
            self.fh = open(Path(params.trace_path), "w", newline="")
            self.w = csv.writer(self.fh)
            self.w.writerow(["iteration", "primal_residual", "dual_residual", "psi"])

    def record(self, it, r, s, psi):
        if self.fh is not None and (it % self.every == 0 or it == 1):
            self.w.writerow([it, f"{r:.6e}", f"{s:.6e}", f"{psi:.12g}"])

    def close(self):
        if self.fh is not None:
            self.fh.close()
            self.fh = None


# -- product QP ------------------------------------------------------------------


def project_simplex_rows(X: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    n, k = X.shape
    U = -np.sort(-X, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    idx = np.arange(1, k + 1)
    cond = U - css / idx > 0
    r = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(n), r] / (r + 1)
    return np.maximum(X - theta[:, None], 0.0)


def project_product_halfspace(x: np.ndarray, c: np.ndarray, gamma: float) -> np.ndarray:
    """Projection onto ``{rows on simplex} ∩ {<c, x> >= gamma}`` (``x, c`` of shape ``n x k``).

    The multiplier of the halfspace is found by bisection; ``<c, P(x + mu c)>``
    is nondecreasing in ``mu``.
    """
    p = project_simplex_rows(x)
    if np.sum(c * p) >= gamma:
        return p
    hi = 1.0
    while np.sum(c * project_simplex_rows(x + hi * c)) < gamma:
        hi *= 2
        if hi > 1e12:
            raise Infeasible("halfspace does not meet the product of simplices")
    lo = 0.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if np.sum(c * project_simplex_rows(x + mid * c)) < gamma:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return project_simplex_rows(x + hi * c)


@dataclass
class QPResult:
    dists: np.ndarray
    psi: float
    margin: float
    kkt_residual: float
    iterations: int


def min_norm_product(
    A_blocks: list[np.ndarray], u: np.ndarray, gamma: float, params: SolverParams | None = None
) -> QPResult:
    """``min |sum_i A_i p_i|^2`` over distributions ``p_i`` with ``<u, sum_i A_i p_i> >= gamma``.

    ``A_i`` has one column per outcome of block ``i``; all blocks share the same
    number of outcomes.  Accelerated projected gradient with restarts.
    """
    params = params or SolverParams()
    n, k = len(A_blocks), A_blocks[0].shape[1]
    A = np.hstack(A_blocks)
    c = (u @ A).reshape(n, k)
    best = c.max(axis=1).sum()
    if best < gamma - 1e-12:
        raise Infeasible(f"margin {gamma:.6g} exceeds the maximum {best:.6g}", best)
    L = 2 * max(np.linalg.norm(A, 2) ** 2, 1e-12)

    def grad(p):
        return (2 * A.T @ (A @ p.ravel())).reshape(n, k)

    def proj(x):
        return project_product_halfspace(x, c, gamma)

    p = proj(np.full((n, k), 1.0 / k))
    y, tk = p.copy(), 1.0
    kkt = float("inf")
    for it in range(1, params.max_iters + 1):
        pn = proj(y - grad(y) / L)
        tn = (1 + math.sqrt(1 + 4 * tk * tk)) / 2
        if np.sum((pn - p) * (y - pn)) > 0:  # restart on non-monotone step
            y, tk = pn.copy(), 1.0
        else:
            y, tk = pn + ((tk - 1) / tn) * (pn - p), tn
        p = pn
        if it % 10 == 0:
            kkt = float(L * np.linalg.norm(p - proj(p - grad(p) / L)))
            if kkt <= params.tol:
                break
    else:
        raise NonConvergence(f"projected gradient hit {params.max_iters} iterations (KKT {kkt:.3g})")
    v = A @ p.ravel()
    return QPResult(p, float(v @ v), float(u @ v), kkt, it)


@dataclass
class ProductPseudocodeword:
    """One distribution over inner codeword indices per outer coordinate."""

    dists: np.ndarray
    psi: float = float("nan")
    margin: float = float("nan")
    kkt_residual: float = float("nan")

    def edge_marginals(self, code) -> np.ndarray:
        """``(n*d) x q0`` marginals of the concatenated symbols."""
        table = np.array(code.bijection)
        out = np.zeros((code.n * code.d, code.q0))
        for i in range(code.n):
            for j in range(code.d):
                out[i * code.d + j] = np.bincount(table[:, j], weights=self.dists[i], minlength=code.q0)
        return out


def concat_blocks(code) -> list[np.ndarray]:
    """Per outer coordinate, the embedded inner codewords as columns (unit total norm)."""
    from .covering import chi_build

    chi = chi_build(code.q0)
    scale = 1.0 / math.sqrt(code.n * code.d)
    cols = np.array([np.concatenate([chi[s] for s in cw]) for cw in code.bijection]).T * scale
    blocks = []
    dim = code.d * (code.q0 - 1)
    for i in range(code.n):
        B = np.zeros((code.n * dim, code.q1))
        B[i * dim : (i + 1) * dim] = cols
        blocks.append(B)
    return blocks


def solve_product_qp(code, u, gamma: float, params: SolverParams | None = None) -> ProductPseudocodeword:
    res = min_norm_product(concat_blocks(code), np.asarray(u, dtype=float), gamma, params)
    return ProductPseudocodeword(res.dists, res.psi, res.margin, res.kkt_residual)
