import itertools
from fractions import Fraction

import pytest

from expdec import instances


def grid_codewords():
    """Independent oracle: 3x3 binary arrays with even rows and columns, row-major."""
    out = []
    for bits in itertools.product(range(2), repeat=9):
        rows = [bits[3 * i : 3 * i + 3] for i in range(3)]
        if all(sum(r) % 2 == 0 for r in rows) and all(sum(r[j] for r in rows) % 2 == 0 for j in range(3)):
            out.append(bits)
    return out


@pytest.fixture(scope="session")
def tensor():
    return instances.tensor_code()


@pytest.fixture(scope="session")
def ael():
    return instances.ael_k44()


@pytest.fixture(scope="session")
def concat():
    return instances.concat_rs_parity()


@pytest.fixture(scope="session")
def k22():
    return instances.k22_repetition()


def threshold_oracle(rows):
    """Threshold words by sampling theta at the midpoint of every elementary interval."""
    from bisect import bisect_right
    from fractions import Fraction

    cums = []
    for r in rows:
        c, acc = [], Fraction(0)
        for x in r:
            acc += Fraction(x)
            c.append(acc)
        cums.append(c)
    pts = sorted({Fraction(0), Fraction(1)} | {x for c in cums for x in c if x < 1})
    words = set()
    for a, b in zip(pts, pts[1:]):
        theta = (a + b) / 2
        words.add(tuple(min(bisect_right(c, theta), len(c) - 1) for c in cums))
    return words


def random_fraction_rows(rng, n, q, den=12):
    rows = []
    for _ in range(n):
        cuts = sorted(int(x) for x in rng.integers(0, den + 1, q - 1))
        parts = [b - a for a, b in zip([0] + cuts, cuts + [den])]
        rows.append([Fraction(p, den) for p in parts])
    return rows
