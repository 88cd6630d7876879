"""End-to-end list decoders and the brute-force list oracle.

Every pipeline runs the same outline: covering program, conditioning,
rounding of local distributions, decoding, then pruning with exact distances.
At desk-scale degrees the guarantees behind each step are not implied, so the
inequalities that the analysis relies on are measured on every run and
reported in ``stats``; with ``audit=True`` a violation raises
:class:`InvariantViolation`.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import comb
from typing import Any, Sequence

import numpy as np

from .algebra import LinearCode, hamming_distance
from .conditioning import make_eta_good
from .covering import covering_setup, johnson, order_rows
from .graph_codes import AELCode, ConcatCode, TannerCode, outer_unique_decoder
from .pseudoexp import compile_constraints
from .rounding import (
    DistributionCollection,
    candidates_from_dists,
    decode_from_dists,
    pe_to_edge_dists,
    pe_to_outer_dists,
    threshold_round,
)
from .solver import CoveringObjective, Infeasible, SolverParams, solve_moment_sdp, solve_product_qp

log = logging.getLogger(__name__)

PSD_ROW_BUDGET = 3000
CHECK_TOL = 1e-6


class InvariantViolation(AssertionError):
    """A runtime check of the analysis failed."""


def as_fraction(x) -> Fraction:
    """Exact value of a user-supplied number (floats via their decimal repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


@dataclass
class DecodeConfig:
    eps: Any
    eta: float | None = None
    t: int | None = None
    k_max: int = 0
    solver: SolverParams = field(default_factory=SolverParams)
    mode: str = "exhaustive"
    seed: int = 0
    delta_dec: Any = None
    kappa: Any = None
    outer_decoder: str = "list"
    strengthen: bool = True
    backend: str = "auto"
    audit: bool = False

    def __post_init__(self):
        if as_fraction(self.eps) <= 0:
            raise ValueError("eps must be positive")
        if self.k_max < 0:
            raise ValueError("k_max must be nonnegative")
        if self.mode not in ("exhaustive", "sample"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.outer_decoder not in ("list", "unique"):
            raise ValueError(f"unknown outer decoder {self.outer_decoder!r}")

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("eps", "delta_dec", "kappa"):
            if out[key] is not None:
                out[key] = str(as_fraction(out[key]))
        return out


@dataclass
class ListEntry:
    word: tuple
    distance: Fraction
    outer: tuple | None = None

    def to_dict(self) -> dict:
        out = {"word": _jsonable(self.word), "distance": str(self.distance)}
        if self.outer is not None:
            out["outer"] = list(self.outer)
        return out


@dataclass
class DecodingList:
    entries: list[ListEntry]
    radius: Any
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.entries = sorted(self.entries, key=lambda e: (e.distance, e.word))
        words = [e.word for e in self.entries]
        if len(set(words)) != len(words):
            raise ValueError("duplicate list entries")
        if any(not e.distance < self.radius for e in self.entries):
            raise ValueError("entry at or beyond the radius")

    @property
    def words(self) -> list[tuple]:
        return [e.word for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word) -> bool:
        return _canon(word) in set(self.words)

    def to_dict(self, config: DecodeConfig | None = None) -> dict:
        out = {
            "list": [e.to_dict() for e in self.entries],
            "radius": str(self.radius) if isinstance(self.radius, Fraction) else self.radius,
            "stats": _jsonable(self.stats),
        }
        if config is not None:
            out["config"] = config.to_dict()
        return out


def _canon(w):
    if len(w) and isinstance(w[0], (tuple, list)):
        return tuple(tuple(int(x) for x in s) for s in w)
    return tuple(int(x) for x in w)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


# -- brute force ----------------------------------------------------------------


def _enumerate(code) -> list[tuple[tuple, tuple | None]]:
    """``(word in received-word space, outer codeword or None)`` pairs."""
    if isinstance(code, TannerCode):
        return [(w, None) for w in code.codewords()]
    if isinstance(code, AELCode):
        return [(g, f) for f, g in code.folded_codewords()]
    if isinstance(code, ConcatCode):
        return [(w, f) for f, w in ((f, code.unchecked_encode(f)) for f in code.outer.codewords())]
    if isinstance(code, LinearCode):
        return [(w, None) for w in code.codewords()]
    raise TypeError(f"cannot enumerate {type(code).__name__}")


def brute_force_list(code, g: Sequence, radius) -> DecodingList:
    """``{h in C : Delta(h, g) < radius}`` by exhaustive scan."""
    g = _canon(g)
    entries = []
    for w, f in _enumerate(code):
        dist = hamming_distance(w, g)
        if dist < radius:
            entries.append(ListEntry(w, dist, f))
    return DecodingList(entries, radius, {"method": "brute_force"})


def _radius(J, eps):
    if isinstance(J, Fraction):
        return J - as_fraction(eps)
    return float(J) - float(eps)


def default_degree(code, k_max: int, budget: int = PSD_ROW_BUDGET) -> int:
    """``2d(k_max+2)``, lowered in steps of 2 (not below ``2d``) while the PSD
    block of the full moment matrix would exceed ``budget`` rows."""
    d, m, q = code.graph.d, code.m, code.inner.q
    t = 2 * d * (k_max + 2)
    while t > 2 * d and sum(comb(m, k) * (q - 1) ** k for k in range(t // 2 + 1)) > budget:
        t -= 2
    return t


def _degree(code, cfg: DecodeConfig, stats: dict) -> int:
    d = code.graph.d
    t = cfg.t if cfg.t is not None else default_degree(code, cfg.k_max)
    if t < 2 * d * (cfg.k_max + 2):
        msg = f"degree t={t} below 2d(k_max+2) = {2 * d * (cfg.k_max + 2)}"
        log.warning(msg)
        stats.setdefault("warnings", []).append(msg)
    return t


def _constraints(code, t: int, strengthen: bool):
    cache = code.__dict__.setdefault("_constraint_cache", {})
    key = (t, strengthen)
    if key not in cache:
        cache[key] = compile_constraints(code, t, strengthen)
    return cache[key]


def _solver_stats(pe) -> dict:
    s = pe.stats
    return {
        "status": s.status,
        "iterations": s.iterations,
        "primal_residual": s.primal_residual,
        "dual_residual": s.dual_residual,
        "psi": s.psi,
        "margin": s.margin,
        "psd_min_eig": s.psd_min_eig,
    }


def _fail(cfg: DecodeConfig, msg: str):
    if cfg.audit:
        raise InvariantViolation(msg)
    log.warning(msg)


def _default_eta(delta0, eps2: float) -> float:
    return min(float(delta0) ** 2 / 9, eps2 / 6)


# -- Tanner ---------------------------------------------------------------------


def edge_deficit(marg: np.ndarray, h: Sequence[int]) -> float:
    """``Delta(pe, h) = E_e (1 - E~[Z_{e, h_e}])``."""
    return float(np.mean(1.0 - marg[np.arange(len(h)), np.asarray(h)]))


def list_decode_tanner(code: TannerCode, g: Sequence[int], cfg: DecodeConfig) -> DecodingList:
    """List of codewords within ``J(delta) - eps`` of ``g``.

    Candidates are the nearest codewords of every threshold word of every
    branch; the list is their exact pruning.  ``stats['certified']`` holds the
    codewords recovered by decoding from distributions at radius ``delta/4``.
    """
    t0 = time.perf_counter()
    g = _canon(g)
    if len(g) != code.m:
        raise ValueError(f"received word has length {len(g)}, code has {code.m}")
    delta = code.designed_distance
    J = johnson(code.q, delta).johnson
    radius = _radius(J, cfg.eps)
    stats: dict = {"radius": radius, "delta": delta}
    if radius <= 0:
        stats["reason"] = "radius <= 0"
        return DecodingList([], radius, stats)
    lam, d0 = code.graph.lam, code.delta0
    dichotomy = lam <= float(d0) / 3
    if not dichotomy:
        stats.setdefault("warnings", []).append("lambda > delta0/3: dichotomy check skipped")
    setup = covering_setup(code, g, float(cfg.eps))
    t = _degree(code, cfg, stats)
    cs = _constraints(code, t, cfg.strengthen)
    obj = CoveringObjective(setup.u, setup.gamma)
    stats.update(gamma=setup.gamma, eps2=setup.eps2, t=t)
    try:
        pe = solve_moment_sdp(cs, obj, params=cfg.solver, backend=cfg.backend)
    except Infeasible as exc:
        stats.update(infeasible=True, bound=exc.bound, seconds=time.perf_counter() - t0)
        return DecodingList([], radius, stats)
    stats["solver"] = _solver_stats(pe)
    eta = cfg.eta if cfg.eta is not None else _default_eta(d0, setup.eps2)
    branches = make_eta_good(pe, code.graph, eta, cfg.k_max, cfg.mode, cfg.seed)
    lin = code.as_linear_code
    nearest = lambda w: lin.nearest_codeword(w)[0]  # noqa: E731
    codewords = code.codewords()

    # covering: every list member is close to the solver's pe
    marg = pe.marginals()
    bound = float(delta) - setup.eps2 + CHECK_TOL
    cover_viol = 0
    for h in codewords:
        if hamming_distance(h, g) < radius and not edge_deficit(marg, h) < bound:
            cover_viol += 1
            _fail(cfg, f"covering violated for {h}")

    cands: set = set()
    certified: set = set()
    dich_viol, checked, eta_hats = 0, 0, []
    for b in branches:
        eta_hats.append(b.report.eta_hat)
        dists = pe_to_edge_dists(b.pe)
        cands.update(candidates_from_dists(nearest, dists))
        c = decode_from_dists(nearest, dists, Fraction(delta) / 4 if isinstance(delta, Fraction) else delta / 4)
        if c is not None:
            certified.add(c)
        eh = b.report.eta_hat
        if dichotomy and eh <= float(d0) ** 2 / 9:
            checked += 1
            bm = b.pe.marginals()
            lo, hi = 3 * eh + CHECK_TOL, float(d0) * (float(d0) - lam) - 3 * eh - CHECK_TOL
            for h in codewords:
                D = edge_deficit(bm, h)
                if not (D <= lo or D >= hi):
                    dich_viol += 1
                    _fail(cfg, f"dichotomy violated: Delta = {D:.6g} in ({lo:.6g}, {hi:.6g})")
    entries = [ListEntry(h, hamming_distance(h, g)) for h in sorted(cands)]
    entries = [e for e in entries if e.distance < radius]
    stats.update(
        eta=eta,
        eta_hat=eta_hats,
        branches=len(branches),
        candidates=len(cands),
        certified=sorted(certified),
        dichotomy_checked=checked,
        dichotomy_violations=dich_viol,
        covering_violations=cover_viol,
        seconds=time.perf_counter() - t0,
    )
    return DecodingList(entries, radius, stats)


# -- AEL -------------------------------------------------------------------------


def _default_delta_dec(outer: LinearCode) -> Fraction:
    e = (int(outer.min_distance() * outer.n) - 1) // 2
    if e <= 0:
        raise ValueError("outer code cannot correct any error; set delta_dec")
    return Fraction(e, outer.n)


def ael_deficits(pe, code: AELCode, f: Sequence[int]) -> tuple[float, float]:
    """``(Delta^L(pe, h), Delta^R(pe, h))`` for the codeword encoding ``f``."""
    q0 = code.q0
    w = code.unchecked_edges(f)

    def miss(nbr):
        p = order_rows(np.asarray(pe.joint(nbr)), nbr, q0)
        idx = 0
        for e in nbr:
            idx = idx * q0 + w[e]
        return 1.0 - float(p[idx])

    dl = float(np.mean([miss(nb) for nb in code.graph.left_order]))
    dr = float(np.mean([miss(nb) for nb in code.graph.right_order]))
    return dl, dr


def list_decode_ael(code: AELCode, g: Sequence[Sequence[int]], cfg: DecodeConfig) -> DecodingList:
    """List of AEL codewords within folded distance ``J(delta0 - kappa) - eps`` of ``g``.

    Entries carry the folded codeword and the outer codeword it encodes.
    """
    t0 = time.perf_counter()
    g = _canon(g)
    if len(g) != code.n or any(len(s) != code.d for s in g):
        raise ValueError("received word must have n folded symbols of length d")
    lam, d0 = code.graph.lam, code.delta0
    delta_dec = as_fraction(cfg.delta_dec) if cfg.delta_dec is not None else _default_delta_dec(code.outer)
    if cfg.kappa is not None:
        kappa = as_fraction(cfg.kappa)
    else:
        kappa = Fraction(0) if lam == 0 else lam / float(delta_dec)
    if lam > float(kappa * delta_dec) + 1e-12 if isinstance(kappa, Fraction) else lam > kappa * float(delta_dec) + 1e-12:
        raise ValueError(f"need lambda <= kappa * delta_dec, got {lam:.6g} > {float(kappa) * float(delta_dec):.6g}")
    delta = d0 - kappa if isinstance(kappa, Fraction) else float(d0) - kappa
    J = johnson(code.q0**code.d, delta).johnson
    radius = _radius(J, cfg.eps)
    stats: dict = {"radius": radius, "delta": delta, "delta_dec": delta_dec, "kappa": kappa}
    if radius <= 0:
        stats["reason"] = "radius <= 0"
        return DecodingList([], radius, stats)
    setup = covering_setup(code, g, float(cfg.eps), delta=delta)
    t = _degree(code, cfg, stats)
    cs = _constraints(code, t, cfg.strengthen)
    obj = CoveringObjective(setup.u, setup.gamma, "folded", setup.groups)
    stats.update(gamma=setup.gamma, eps2=setup.eps2, t=t)
    try:
        pe = solve_moment_sdp(cs, obj, params=cfg.solver, backend=cfg.backend)
    except Infeasible as exc:
        stats.update(infeasible=True, bound=exc.bound, seconds=time.perf_counter() - t0)
        return DecodingList([], radius, stats)
    stats["solver"] = _solver_stats(pe)
    eta = cfg.eta if cfg.eta is not None else _default_eta(d0, setup.eps2)
    branches = make_eta_good(pe, code.graph, eta, cfg.k_max, cfg.mode, cfg.seed)
    decoder = outer_unique_decoder(code.outer)
    slack = float(delta_dec) * setup.eps2 / (4 * float(d0))
    outer_words = code.outer.codewords()

    cover_viol = 0
    for f in outer_words:
        h = code.fold(code.unchecked_edges(f))
        if hamming_distance(h, g) < radius:
            _, dr = ael_deficits(pe, code, f)
            if not dr < float(delta) - setup.eps2 + CHECK_TOL:
                cover_viol += 1
                _fail(cfg, f"covering violated for outer codeword {f}")

    cands: set = set()
    certified: set = set()
    amp_viol, eta_hats = 0, []
    for b in branches:
        eh = b.report.eta_hat
        eta_hats.append(eh)
        for f in outer_words:
            dl, dr = ael_deficits(b.pe, code, f)
            if dl > CHECK_TOL and dr < float(d0) - (lam + eh + CHECK_TOL) / dl:
                amp_viol += 1
                _fail(cfg, f"amplification violated: Delta^L = {dl:.6g}, Delta^R = {dr:.6g}")
        dists = pe_to_outer_dists(b.pe, code)
        cands.update(candidates_from_dists(decoder, dists))
        c = decode_from_dists(decoder, dists, float(delta_dec) - slack)
        if c is not None:
            certified.add(c)
    entries = []
    for f in sorted(cands):
        h = code.fold(code.unchecked_edges(f))
        dist = hamming_distance(h, g)
        if dist < radius:
            entries.append(ListEntry(h, dist, tuple(f)))
    stats.update(
        eta=eta,
        eta_hat=eta_hats,
        branches=len(branches),
        candidates=len(cands),
        certified=sorted(certified),
        amplification_violations=amp_viol,
        covering_violations=cover_viol,
        seconds=time.perf_counter() - t0,
    )
    return DecodingList(entries, radius, stats)


# -- concatenated codes ------------------------------------------------------------


def list_decode_concat(code: ConcatCode, g: Sequence[int], cfg: DecodeConfig) -> DecodingList:
    """List decoding up to ``J(delta_dec * delta0) - eps`` via a product-form QP.

    ``cfg.outer_decoder='list'`` decodes each threshold word by listing all outer
    codewords within ``delta_dec``; ``'unique'`` uses the outer unique decoder.
    ``stats['pre_prune']`` keeps every candidate before pruning.
    """
    t0 = time.perf_counter()
    g = _canon(g)
    if len(g) != code.length:
        raise ValueError(f"received word has length {len(g)}, code has {code.length}")
    d0 = code.delta0
    if cfg.delta_dec is not None:
        delta_dec = as_fraction(cfg.delta_dec)
    elif cfg.outer_decoder == "unique":
        delta_dec = _default_delta_dec(code.outer)
    else:
        delta_dec = code.delta1 / 2
    delta = delta_dec * d0
    J = johnson(code.q0, delta).johnson
    radius = _radius(J, cfg.eps)
    stats: dict = {"radius": radius, "delta": delta, "delta_dec": delta_dec}
    if radius <= 0:
        stats["reason"] = "radius <= 0"
        return DecodingList([], radius, stats)
    setup = covering_setup(code, g, float(cfg.eps), delta=delta)
    stats.update(gamma=setup.gamma, eps2=setup.eps2)
    try:
        pcw = solve_product_qp(code, setup.u, setup.gamma, cfg.solver)
    except Infeasible as exc:
        stats.update(infeasible=True, bound=exc.bound, seconds=time.perf_counter() - t0)
        return DecodingList([], radius, stats)
    stats["solver"] = {"psi": pcw.psi, "margin": pcw.margin, "kkt_residual": pcw.kkt_residual}
    P = np.clip(pcw.dists, 0.0, None)
    dists = DistributionCollection.from_array(P / P.sum(axis=1, keepdims=True))
    outer_words = code.outer.codewords()
    if cfg.outer_decoder == "list":

        def decode_all(y):
            return [f for f in outer_words if hamming_distance(f, y) < delta_dec]

    else:
        uniq = outer_unique_decoder(code.outer)

        def decode_all(y):
            f = uniq(y)
            return [] if f is None else [f]

    words = threshold_round(dists)
    cands = sorted({f for y in words for f in decode_all(y)})

    marg = pcw.edge_marginals(code)
    cover_viol = 0
    for f in outer_words:
        w = code.unchecked_encode(f)
        if hamming_distance(w, g) < radius and not edge_deficit(marg, w) < float(delta) - setup.eps2 + CHECK_TOL:
            cover_viol += 1
            _fail(cfg, f"covering violated for outer codeword {f}")

    entries = []
    for f in cands:
        w = code.unchecked_encode(f)
        dist = hamming_distance(w, g)
        if dist < radius:
            entries.append(ListEntry(w, dist, tuple(f)))
    stats.update(
        thresholds=len(words),
        pre_prune=[code.unchecked_encode(f) for f in cands],
        covering_violations=cover_viol,
        seconds=time.perf_counter() - t0,
    )
    return DecodingList(entries, radius, stats)


def list_decode(code, g, cfg: DecodeConfig) -> DecodingList:
    if isinstance(code, TannerCode):
        return list_decode_tanner(code, g, cfg)
    if isinstance(code, AELCode):
        return list_decode_ael(code, g, cfg)
    if isinstance(code, ConcatCode):
        return list_decode_concat(code, g, cfg)
    raise TypeError(f"no list decoder for {type(code).__name__}")


# -- parameters ---------------------------------------------------------------------


def _min_ramanujan_degree(lam: Fraction) -> int:
    """Smallest ``d >= 3`` with ``2 sqrt(d-1) / d <= lam``, i.e. ``4(d-1) <= lam^2 d^2``."""
    if lam >= 1:
        return 3
    approx = (2 / float(lam) ** 2) * (1 + math.sqrt(max(1 - float(lam) ** 2, 0.0)))
    d = max(3, int(approx) - 2)
    while 4 * (d - 1) > lam * lam * d * d:
        d += 1
    while d > 3 and 4 * (d - 2) <= lam * lam * (d - 1) ** 2:
        d -= 1
    return d


def near_mds_params(eps1, c=1, rho0=Fraction(1, 2)) -> dict:
    """Parameters of the near-MDS construction (a calculator; nothing is built)."""
    eps1, c, rho0 = as_fraction(eps1), as_fraction(c), as_fraction(rho0)
    if not 0 < eps1 < Fraction(1, 2):
        raise ValueError("eps1 must lie in (0, 1/2)")
    delta_dec = c * eps1 * eps1
    kappa = eps1
    lam = kappa * delta_dec
    d = _min_ramanujan_degree(lam)
    q0 = d
    rho = (1 - eps1) * rho0
    bound = 1 - rho - 3 * eps1
    warnings = []
    if bound <= 0:
        warnings.append("distance bound 1 - rho - 3 eps1 is vacuous")
    return {
        "eps1": eps1,
        "delta_dec": delta_dec,
        "kappa": kappa,
        "lambda": lam,
        "degree": d,
        "q0": q0,
        "alphabet_bits": float(rho0) * d * math.log2(q0),
        "rate": rho,
        "distance_bound": bound,
        "warnings": warnings,
    }
