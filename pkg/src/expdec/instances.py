"""Small named instances used by the tests, the acceptance suite and the CLI."""

from __future__ import annotations

from .algebra import Field, LinearCode, hamming_code_7_4, parity_code, repetition_code, rs_build
from .expander import BipartiteExpander, build_graph
from .graph_codes import AELCode, ConcatCode, TannerCode


def tensor_code() -> TannerCode:
    """K_{3,3} with the [3,2]_2 parity code: 3x3 binary arrays with even rows and columns."""
    return TannerCode(build_graph("complete", 3, 3), parity_code(Field(2), 3))


def hamming_tanner() -> TannerCode:
    """K_{7,7} with the [7,4,3] Hamming code on both sides."""
    return TannerCode(build_graph("complete", 7, 7), hamming_code_7_4())


def k22_repetition() -> TannerCode:
    return TannerCode(build_graph("complete", 2, 2), repetition_code(Field(2), 2))


def two_k22() -> BipartiteExpander:
    """Disjoint union of two K_{2,2}, a disconnected graph with lambda = 1."""
    edges = [(a, b) for blk in (0, 2) for a in (blk, blk + 1) for b in (blk, blk + 1)]
    return BipartiteExpander.from_edges(4, 2, edges)


def ael_inner_4_2() -> LinearCode:
    """[4,2,2]_2 code {0000, 0011, 1100, 1111}."""
    return LinearCode(Field(2), [[1, 1, 0, 0], [0, 0, 1, 1]], name="C0[4,2]")


def ael_k44() -> AELCode:
    """AEL on K_{4,4} with inner [4,2]_2 and outer RS[4,2] over GF(4)."""
    return AELCode(build_graph("complete", 4, 4), ael_inner_4_2(), rs_build(Field(4), 4, 2))


def concat_rs_parity() -> ConcatCode:
    """RS[4,2] over GF(4) concatenated with the [3,2]_2 parity code (length 12)."""
    return ConcatCode(rs_build(Field(4), 4, 2), parity_code(Field(2), 3))


PRESETS = {
    "tensor": tensor_code,
    "hamming-tanner": hamming_tanner,
    "k22-repetition": k22_repetition,
    "ael-k44": ael_k44,
    "concat-rs-parity": concat_rs_parity,
}
