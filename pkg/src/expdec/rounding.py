"""Threshold rounding of per-coordinate distributions."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .graph_codes import AELCode
from .pseudoexp import PseudoExpectation

Word = tuple[int, ...]

FLOAT_SNAP = 1e-12


class ConstraintViolation(ValueError):
    """A local distribution puts mass outside the inner code."""


@dataclass
class DistributionCollection:
    """One distribution per coordinate; rows may hold floats or Fractions."""

    weights: list[list]

    def __post_init__(self):
        rows = [list(r) for r in self.weights]
        if not rows or len({len(r) for r in rows}) != 1:
            raise ValueError("need a nonempty rectangular collection")
        for r in rows:
            if any(x < 0 for x in r):
                raise ValueError("negative probability")
            s = sum(r)
            if (s != 1) if all(isinstance(x, (int, Fraction)) for x in r) else abs(s - 1) > 1e-9:
                raise ValueError(f"row sums to {s}, not 1")
        self.weights = rows

    @classmethod
    def from_array(cls, P) -> "DistributionCollection":
        return cls([[float(x) for x in row] for row in np.asarray(P, dtype=float)])

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def q(self) -> int:
        return len(self.weights[0])

    @property
    def exact(self) -> bool:
        return all(isinstance(x, (int, Fraction)) for r in self.weights for x in r)

    def array(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.weights])

    def deficit(self, h: Sequence[int]):
        """``E_i (1 - D_i(h_i))``, exact for Fraction rows."""
        tot = sum(1 - r[int(s)] for r, s in zip(self.weights, h))
        return tot / self.n if not self.exact else Fraction(tot) / self.n


def _normalise(P: np.ndarray, tol: float) -> np.ndarray:
    if np.any(P < -tol):
        raise ConstraintViolation(f"local probability {P.min():.3g} below -{tol:g}")
    P = np.clip(P, 0.0, None)
    return P / P.sum(axis=-1, keepdims=True)


def pe_to_edge_dists(pe: PseudoExpectation, tol: float = 1e-6) -> DistributionCollection:
    """Single-variable marginals, clipped at zero and renormalised."""
    return DistributionCollection.from_array(_normalise(pe.marginals(), tol))


def pe_to_outer_dists(pe: PseudoExpectation, code: AELCode, tol: float = 1e-6) -> DistributionCollection:
    """Distribution over outer symbols per left vertex.

    The local distribution on ``N_L(l)`` is read at the inner codewords in
    bijection order.  Mass outside the inner code above ``tol`` is an error.
    """
    q0 = code.q0
    idx = [sum(s * q0**k for k, s in enumerate(reversed(c))) for c in code.bijection]
    rows = []
    for l, nbr in enumerate(code.graph.left_order):
        order = np.argsort(nbr)
        P = np.array(pe.joint(nbr)).reshape((q0,) * code.d)
        # joint() is indexed by sorted variables; bring axes back to neighborhood order
        P = np.transpose(P, np.argsort(order)).reshape(-1)
        row = P[idx]
        outside = 1.0 - row.sum()
        if outside > tol:
            raise ConstraintViolation(f"left vertex {l}: mass {outside:.3g} outside the inner code")
        rows.append(row)
    return DistributionCollection.from_array(_normalise(np.array(rows), tol))


def _breakpoints(rows: list[list], exact: bool) -> list:
    pts = {Fraction(0) if exact else 0.0}
    for r in rows:
        c = Fraction(0) if exact else 0.0
        for x in r[:-1]:
            c += x
            pts.add(c)
    pts = sorted(p for p in pts if p < 1)
    if exact:
        return pts
    out = []
    for p in pts:
        if p > 1 - FLOAT_SNAP:
            break
        if not out or p - out[-1] > FLOAT_SNAP:
            out.append(p)
    return out


def threshold_round(dists: DistributionCollection) -> list[Word]:
    """All distinct words ``h^theta`` for ``theta`` in ``[0, 1)``.

    ``h^theta_i`` is the symbol ``j`` with ``theta`` in
    ``[D_i(<j), D_i(<=j))``.  The word only changes at cumulative sums, so the
    breakpoints enumerate every outcome.  Returned sorted.
    """
    exact = dists.exact
    rows = dists.weights
    words = set()
    for theta in _breakpoints(rows, exact):
        w = []
        for r in rows:
            c = Fraction(0) if exact else 0.0
            j = 0
            for j, x in enumerate(r):
                c += x
                if theta < c - (0 if exact else FLOAT_SNAP):
                    break
            w.append(j)
        words.add(tuple(w))
    return sorted(words)


def sample_round(dists: DistributionCollection, rng: np.random.Generator) -> Word:
    """``h^theta`` for one uniform ``theta``."""
    theta = rng.random()
    P = np.cumsum(dists.array(), axis=1)
    return tuple(int(min(np.searchsorted(row, theta, side="right"), dists.q - 1)) for row in P)


def candidates_from_dists(decoder: Callable[[Word], Word | None], dists: DistributionCollection) -> list[Word]:
    """Decoder outputs over every threshold word, deduplicated and sorted."""
    out = {decoder(w) for w in threshold_round(dists)}
    out.discard(None)
    return sorted(out)


def decode_from_dists(
    decoder: Callable[[Word], Word | None],
    dists: DistributionCollection,
    delta_dec,
    margin: float = 1e-9,
    within: Callable[[Word, Word], float] | None = None,
) -> Word | None:
    """The unique ``h`` with deficit ``< delta_dec`` if threshold rounding finds it.

    Averaging over ``theta`` gives ``E Delta(h^theta, h) = deficit(h)``, so
    some threshold word lies within ``delta_dec`` of ``h`` and the unique
    decoder returns ``h`` there.  Returns ``None`` if no candidate qualifies.
    """
    found = None
    for h in candidates_from_dists(decoder, dists):
        if float(dists.deficit(h)) < float(delta_dec) - margin:
            if found is not None and found != h:
                raise ValueError("two codewords with deficit below delta_dec")
            found = h
    return found


def iter_threshold_words(dists: DistributionCollection) -> Iterable[Word]:
    yield from threshold_round(dists)
