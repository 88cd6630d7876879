"""Finite fields, linear codes and Reed-Solomon unique decoding.

Field elements are integers in ``[0, q)``.  For a prime power ``q = p^k`` the
integer ``sum_i c_i p^i`` stands for the polynomial ``sum_i c_i x^i`` modulo a
fixed primitive polynomial.  Words are tuples of ints so they are hashable and
compare lexicographically, which is the tie-break order used throughout.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

Word = tuple

# Primitive polynomials for GF(2^m), bit i = coefficient of x^i.
PRIMITIVE_POLYS_GF2 = {
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x89,
    8: 0x11D,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}

MAX_FIELD_ORDER = 1 << 16
DEFAULT_ENUM_BUDGET = 1 << 20


class BudgetExceeded(ValueError):
    """An exhaustive enumeration would exceed its configured budget."""


def prime_power(q: int) -> tuple[int, int]:
    """Return ``(p, k)`` with ``q = p**k``; raise if ``q`` is not a prime power."""
    if q < 2:
        raise ValueError(f"field order must be >= 2, got {q}")
    p = next((f for f in range(2, math.isqrt(q) + 1) if q % f == 0), q)
    k, r = 0, q
    while r % p == 0:
        r //= p
        k += 1
    if r != 1:
        raise ValueError(f"{q} is not a prime power")
    return p, k


def _poly_exp_table(p: int, k: int, modulus: Sequence[int]) -> np.ndarray | None:
    """Powers of x modulo ``modulus`` (monic, low-to-high); None if x is not primitive."""
    q = p**k
    table = np.zeros(q - 1, dtype=np.int64)
    cur = [1] + [0] * (k - 1)
    weights = [p**i for i in range(k)]
    seen = set()
    for i in range(q - 1):
        val = sum(c * w for c, w in zip(cur, weights))
        if val in seen:
            return None
        seen.add(val)
        table[i] = val
        # multiply by x and reduce with x^k = -sum modulus[j] x^j
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            cur = [(c - top * m) % p for c, m in zip(cur, modulus[:k])]
    return table


class Field:
    """GF(q) for a prime power ``q <= 2**16``.

    Prime fields use modular arithmetic.  Extension fields use log/exp tables
    over a primitive polynomial: the fixed table above for characteristic 2,
    otherwise the lexicographically smallest primitive monic polynomial.
    """

    def __init__(self, q: int):
        if q > MAX_FIELD_ORDER:
            raise ValueError(f"field order {q} exceeds {MAX_FIELD_ORDER}")
        self.q = q
        self.p, self.k = prime_power(q)
        self.modulus: tuple[int, ...] | None = None
        if self.k == 1:
            g = self._primitive_root()
            exp = np.ones(q - 1, dtype=np.int64)
            for i in range(1, q - 1):
                exp[i] = exp[i - 1] * g % q
        elif self.p == 2:
            poly = PRIMITIVE_POLYS_GF2[self.k]
            self.modulus = tuple((poly >> i) & 1 for i in range(self.k + 1))
            exp = _poly_exp_table(2, self.k, self.modulus)
            if exp is None:
                raise RuntimeError(f"polynomial {poly:#x} is not primitive")
        else:
            for coeffs in itertools.product(range(self.p), repeat=self.k):
                if coeffs[0] == 0:
                    continue
                exp = _poly_exp_table(self.p, self.k, coeffs)
                if exp is not None:
                    self.modulus = tuple(coeffs) + (1,)
                    break
        self._exp = np.concatenate([exp, exp])
        self._log = np.zeros(q, dtype=np.int64)
        self._log[exp] = np.arange(q - 1)
        if self.k > 1 and self.p != 2:
            pw = self.p ** np.arange(self.k)
            self._digits = (np.arange(q)[:, None] // pw) % self.p
            self._pw = pw

    def _primitive_root(self) -> int:
        p = self.q
        if p == 2:
            return 1
        factors, r, f = set(), p - 1, 2
        while f * f <= r:
            while r % f == 0:
                factors.add(f)
                r //= f
            f += 1
        if r > 1:
            factors.add(r)
        for g in range(2, p):
            if all(pow(g, (p - 1) // f, p) != 1 for f in factors):
                return g
        raise RuntimeError("no primitive root")  # pragma: no cover

    def __repr__(self) -> str:
        return f"Field({self.q})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Field) and other.q == self.q

    def __hash__(self) -> int:
        return hash(("Field", self.q))

    # -- vectorised arithmetic -------------------------------------------

    def add(self, a, b):
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        if self.p == 2:
            return a ^ b
        if self.k == 1:
            return (a + b) % self.p
        d = (self._digits[a] + self._digits[b]) % self.p
        return d @ self._pw

    def neg(self, a):
        a = np.asarray(a, dtype=np.int64)
        if self.p == 2:
            return a
        if self.k == 1:
            return (-a) % self.p
        return ((-self._digits[a]) % self.p) @ self._pw

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        if self.k == 1:
            return (a * b) % self.p
        out = self._exp[self._log[a] + self._log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero in " + repr(self))
        return self._exp[(self.q - 1 - self._log[a]) % (self.q - 1)]

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            return 0 if e else 1
        return int(self._exp[(int(self._log[a]) * e) % (self.q - 1)])

    def dot(self, a, b) -> int:
        return int(self.sum(self.mul(a, b)))

    def sum(self, a, axis=None):
        """Field sum along ``axis`` (all entries when None)."""
        a = np.asarray(a, dtype=np.int64)
        if axis is None:
            a = a.reshape(-1)
            axis = 0
        if self.p == 2:
            return np.bitwise_xor.reduce(a, axis=axis) if a.shape[axis] else np.zeros(
                np.delete(a.shape, axis), dtype=np.int64)
        if self.k == 1:
            return a.sum(axis=axis) % self.p
        return (self._digits[a].sum(axis=axis) % self.p) @ self._pw

    def matmul(self, A, B):
        """Matrix product over the field."""
        A, B = np.asarray(A, dtype=np.int64), np.asarray(B, dtype=np.int64)
        if self.k == 1 and self.p < (1 << 20):
            return (A @ B) % self.p
        out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
        for i in range(A.shape[1]):
            out = self.add(out, self.mul(A[:, i : i + 1], B[i : i + 1, :]))
        return out


# -- linear algebra over a field ------------------------------------------


def rref(field: Field, A) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    R = np.array(A, dtype=np.int64, copy=True)
    if R.ndim != 2:
        raise ValueError("rref expects a matrix")
    rows, cols = R.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(R[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        R[[r, piv]] = R[[piv, r]]
        R[r] = field.mul(R[r], field.inv(R[r, c]))
        for i in range(rows):
            if i != r and R[i, c]:
                R[i] = field.sub(R[i], field.mul(R[r], R[i, c]))
        pivots.append(c)
        r += 1
    return R, pivots


def rank(field: Field, A) -> int:
    A = np.asarray(A)
    if A.size == 0:
        return 0
    return len(rref(field, A)[1])


def nullspace(field: Field, A, ncols: int | None = None) -> np.ndarray:
    """Basis (as rows) of ``{x : A x^T = 0}``."""
    A = np.asarray(A, dtype=np.int64)
    n = A.shape[1] if A.size else ncols
    if A.size == 0:
        return np.eye(n, dtype=np.int64)
    R, piv = rref(field, A)
    free = [c for c in range(n) if c not in piv]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, c in enumerate(piv):
            basis[i, c] = field.neg(R[r, f])
    return basis


def solve(field: Field, A, b) -> np.ndarray | None:
    """One solution of ``A x = b`` (free variables zero), or None."""
    A = np.asarray(A, dtype=np.int64)
    aug = np.concatenate([A, np.asarray(b, dtype=np.int64).reshape(-1, 1)], axis=1)
    R, piv = rref(field, aug)
    if A.shape[1] in piv:
        return None
    x = np.zeros(A.shape[1], dtype=np.int64)
    for r, c in enumerate(piv):
        x[c] = R[r, -1]
    return x


# -- words -----------------------------------------------------------------


def hamming_distance(a: Sequence, b: Sequence) -> Fraction:
    """Normalised Hamming distance as an exact fraction."""
    if len(a) != len(b):
        raise ValueError("length mismatch")
    if not a:
        return Fraction(0)
    return Fraction(sum(x != y for x, y in zip(a, b)), len(a))


def as_word(w: Iterable) -> Word:
    return tuple(int(x) for x in w)


# -- linear codes ----------------------------------------------------------


class LinearCode:
    """A linear ``[n, k]_q`` code with generator ``G`` and parity check ``H``.

    ``G`` must have full row rank.  ``H`` is derived from ``G`` when omitted and
    validated (``G H^T = 0``, rank ``n - k``) when given.
    """

    def __init__(self, field: Field, generator, paritycheck=None, name: str = ""):
        self.field = field
        G = np.atleast_2d(np.asarray(generator, dtype=np.int64))
        if G.size == 0:
            raise ValueError("generator must be non-empty")
        if G.min() < 0 or G.max() >= field.q:
            raise ValueError("generator entries outside the field")
        if rank(field, G) != G.shape[0]:
            raise ValueError("generator rows are linearly dependent")
        self.generator = G
        if paritycheck is None:
            H = nullspace(field, G)
        else:
            H = np.atleast_2d(np.asarray(paritycheck, dtype=np.int64))
            if H.size and (H.shape[1] != G.shape[1]):
                raise ValueError("parity check has wrong width")
            if H.size and np.any(field.matmul(G, H.T)):
                raise ValueError("G H^T != 0")
            if rank(field, H) != G.shape[1] - G.shape[0]:
                raise ValueError("parity check rank must be n - k")
        self.paritycheck = H.reshape(-1, G.shape[1])
        self.name = name

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def n(self) -> int:
        return self.generator.shape[1]

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k, self.n)

    @property
    def size(self) -> int:
        return self.q**self.k

    def __repr__(self) -> str:
        return f"LinearCode({self.name or f'[{self.n},{self.k}]_{self.q}'})"

    def encode(self, msg: Sequence[int]) -> Word:
        m = np.asarray(msg, dtype=np.int64).reshape(1, -1)
        if m.shape[1] != self.k or m.min(initial=0) < 0 or m.max(initial=0) >= self.q:
            raise ValueError(f"message must be {self.k} symbols in [0, {self.q})")
        return as_word(self.field.matmul(m, self.generator)[0])

    def unencode(self, c: Sequence[int]) -> Word:
        """The message whose encoding is ``c``."""
        x = solve(self.field, self.generator.T, list(c)) if len(c) == self.n else None
        if x is None:
            raise ValueError("not a codeword")
        return as_word(x)

    def syndrome(self, w: Sequence[int]) -> np.ndarray:
        if not self.paritycheck.size:
            return np.zeros(0, dtype=np.int64)
        return self.field.matmul(self.paritycheck, np.asarray(w, dtype=np.int64).reshape(-1, 1))[:, 0]

    def is_codeword(self, w: Sequence[int]) -> bool:
        if len(w) != self.n:
            return False
        return not np.any(self.syndrome(w))

    def messages(self, budget: int = DEFAULT_ENUM_BUDGET) -> np.ndarray:
        if self.size > budget:
            raise BudgetExceeded(f"{self.size} codewords exceed budget {budget}")
        grids = np.indices((self.q,) * self.k).reshape(self.k, -1).T
        return grids.astype(np.int64)

    def codeword_array(self, budget: int = DEFAULT_ENUM_BUDGET) -> np.ndarray:
        """All codewords, row ``i`` encoding the ``i``-th message in lexicographic order."""
        if getattr(self, "_cw", None) is None:
            self._cw = self.field.matmul(self.messages(budget), self.generator)
            self._cw.setflags(write=False)
        return self._cw

    def codewords(self, budget: int = DEFAULT_ENUM_BUDGET) -> list[Word]:
        return [as_word(r) for r in self.codeword_array(budget)]

    @cached_property
    def sorted_codewords(self) -> list[Word]:
        return sorted(self.codewords())

    def min_distance(self, budget: int = DEFAULT_ENUM_BUDGET) -> Fraction:
        """Relative minimum distance from the minimum nonzero weight."""
        if getattr(self, "_dist", None) is None:
            cw = self.codeword_array(budget)
            w = np.count_nonzero(cw, axis=1)
            w = w[w > 0]
            self._dist = Fraction(int(w.min()), self.n) if w.size else Fraction(1)
        return self._dist

    def min_distance_pairwise(self, budget: int = 1 << 12) -> Fraction:
        cw = self.codeword_array(budget * budget)
        if len(cw) > budget:
            raise BudgetExceeded("pairwise distance enumeration too large")
        if len(cw) < 2:
            return Fraction(1)
        d = (cw[:, None, :] != cw[None, :, :]).sum(-1)
        d[np.diag_indices(len(cw))] = self.n + 1
        return Fraction(int(d.min()), self.n)

    def nearest_codeword(self, w: Sequence[int], budget: int = DEFAULT_ENUM_BUDGET) -> tuple[Word, Fraction]:
        """Closest codeword, ties broken by the lexicographically smallest one."""
        cw = self.codeword_array(budget)
        dist = np.count_nonzero(cw != np.asarray(w, dtype=np.int64), axis=1)
        best = dist.min()
        tied = cw[dist == best]
        if len(tied) > 1:
            tied = tied[np.lexsort(tied.T[::-1])]
        return as_word(tied[0]), Fraction(int(best), self.n)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "k": self.k,
            "generator": self.generator.tolist(),
            "paritycheck": self.paritycheck.tolist(),
        }


def encode(code: LinearCode, msg: Sequence[int]) -> Word:
    return code.encode(msg)


def min_distance(code: LinearCode) -> Fraction:
    return code.min_distance()


def nearest_codeword(code: LinearCode, w: Sequence[int]) -> tuple[Word, Fraction]:
    return code.nearest_codeword(w)


def repetition_code(field: Field, n: int) -> LinearCode:
    return LinearCode(field, [[1] * n], name=f"rep{n}")


def parity_code(field: Field, n: int) -> LinearCode:
    """Single parity check code (sum of symbols zero)."""
    G = np.zeros((n - 1, n), dtype=np.int64)
    for i in range(n - 1):
        G[i, i] = 1
        G[i, -1] = int(field.neg(1))
    return LinearCode(field, G, name=f"parity{n}")


def hamming_code_7_4() -> LinearCode:
    G = [
        [1, 0, 0, 0, 0, 1, 1],
        [0, 1, 0, 0, 1, 0, 1],
        [0, 0, 1, 0, 1, 1, 0],
        [0, 0, 0, 1, 1, 1, 1],
    ]
    return LinearCode(Field(2), G, name="hamming7")


# -- polynomials (low-to-high coefficient lists) ---------------------------


def poly_eval(field: Field, coeffs: Sequence[int], xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.int64)
    acc = np.zeros_like(xs)
    for c in reversed(list(coeffs)):
        acc = field.add(field.mul(acc, xs), c)
    return acc


def _trim(p: list[int]) -> list[int]:
    while p and p[-1] == 0:
        p.pop()
    return p


def poly_divmod(field: Field, num: Sequence[int], den: Sequence[int]) -> tuple[list[int], list[int]]:
    num, den = _trim([int(c) for c in num]), _trim([int(c) for c in den])
    if not den:
        raise ZeroDivisionError("polynomial division by zero")
    quo = [0] * max(len(num) - len(den) + 1, 0)
    lead_inv = int(field.inv(den[-1]))
    rem = list(num)
    while len(rem) >= len(den) and rem:
        shift = len(rem) - len(den)
        c = int(field.mul(rem[-1], lead_inv))
        quo[shift] = c
        for i, d in enumerate(den):
            rem[shift + i] = int(field.sub(rem[shift + i], field.mul(c, d)))
        _trim(rem)
    return _trim(quo), rem


# -- Reed-Solomon ----------------------------------------------------------


class ReedSolomonCode(LinearCode):
    """RS code evaluating polynomials of degree < k at ``points``."""

    def __init__(self, field: Field, n: int, k: int, points: Sequence[int] | None = None):
        if not 1 <= k <= n <= field.q:
            raise ValueError(f"need 1 <= k <= n <= q, got k={k}, n={n}, q={field.q}")
        pts = list(range(n)) if points is None else [int(x) for x in points]
        if len(set(pts)) != n or min(pts) < 0 or max(pts) >= field.q:
            raise ValueError("evaluation points must be n distinct field elements")
        G = np.array([[field.pow(x, i) for x in pts] for i in range(k)], dtype=np.int64)
        super().__init__(field, G, name=f"RS[{n},{k}]_{field.q}")
        self.points = pts
        self._dist = Fraction(n - k + 1, n)

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update(kind="reed_solomon", points=list(self.points))
        return d


def rs_build(field: Field, n: int, k: int) -> ReedSolomonCode:
    """RS code over the first ``n`` field elements."""
    return ReedSolomonCode(field, n, k)


def rs_unique_decode(code: ReedSolomonCode, w: Sequence[int]) -> Word | None:
    """Berlekamp-Welch decoding up to ``floor((n-k)/2)`` errors.

    Returns the unique codeword within that radius or None.
    """
    F, n, k = code.field, code.n, code.k
    w = as_word(w)
    if len(w) != n:
        raise ValueError("received word has wrong length")
    e = (n - k) // 2
    xs = np.asarray(code.points, dtype=np.int64)
    wv = np.asarray(w, dtype=np.int64)
    # unknowns: Q_0..Q_{e+k-1}, E_0..E_{e-1}; E is monic of degree e
    A = np.zeros((n, e + k + e), dtype=np.int64)
    for j in range(e + k):
        A[:, j] = [F.pow(int(x), j) for x in xs]
    for j in range(e):
        A[:, e + k + j] = F.neg(F.mul(wv, [F.pow(int(x), j) for x in xs]))
    b = F.mul(wv, [F.pow(int(x), e) for x in xs])
    sol = solve(F, A, b)
    if sol is None:
        return None
    Q = list(sol[: e + k])
    E = list(sol[e + k :]) + [1]
    P, rem = poly_divmod(F, Q, E)
    if rem or len(P) > k:
        return None
    cw = as_word(poly_eval(F, P, xs))
    if sum(a != b for a, b in zip(cw, w)) > e:
        return None
    return cw
