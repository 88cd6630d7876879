import itertools

import numpy as np
import pytest

from conftest import grid_codewords
from expdec.covering import chi_build, embed_word, pe_embed
from expdec.pseudoexp import check_axioms, compile_constraints
from expdec.solver import (
    CoveringObjective,
    Infeasible,
    SolverParams,
    concat_blocks,
    min_norm_product,
    project_product_halfspace,
    project_simplex_rows,
    solve_moment_sdp,
    solve_product_qp,
)

C = (0, 1, 1, 0, 1, 1, 0, 0, 0)
PARAMS = SolverParams(tol=1e-7)


@pytest.fixture(scope="module")
def cs6(tensor):
    return compile_constraints(tensor, 6)


def test_feasible_margin(cs6):
    u = embed_word(C, 2)
    pe = solve_moment_sdp(cs6, CoveringObjective(u, 0.9), params=PARAMS)
    v = pe_embed(pe)
    assert u @ v >= 0.9 - 1e-6
    assert v @ v <= 1 + 1e-6
    assert pe.stats.status == "converged"
    assert check_axioms(pe, tol=1e-6, constraints=cs6).passed


def test_margin_above_one_infeasible(cs6):
    with pytest.raises(Infeasible):
        solve_moment_sdp(cs6, CoveringObjective(embed_word(C, 2), 1.1), params=PARAMS)


def test_certificate_detects_unreachable_margin(cs6):
    # a non-codeword direction: the best codeword correlation is 7/9
    g = (1, 0, 0, 0, 0, 0, 0, 0, 0)
    best = max(embed_word(g, 2) @ embed_word(c, 2) for c in grid_codewords())
    assert best == pytest.approx(7 / 9)
    with pytest.raises(Infeasible):
        solve_moment_sdp(cs6, CoveringObjective(embed_word(g, 2), 0.95), params=PARAMS)


def test_inactive_margin_reaches_centroid(cs6):
    pe = solve_moment_sdp(cs6, CoveringObjective(embed_word(C, 2), -1.0), params=PARAMS)
    assert pe.stats.psi <= 1e-6
    assert np.allclose(pe.marginals(), 0.5, atol=1e-4)


def test_backends_agree(tensor):
    cs = compile_constraints(tensor, 6)
    u = embed_word((0, 1, 0, 0, 1, 0, 0, 0, 0), 2)
    obj = CoveringObjective(u, 0.4)
    a = solve_moment_sdp(cs, obj, params=PARAMS, backend="fourier")
    b = solve_moment_sdp(cs, obj, params=PARAMS, backend="generic")
    assert a.stats.psi == pytest.approx(b.stats.psi, abs=1e-5)
    assert np.allclose(pe_embed(a), pe_embed(b), atol=1e-3)


def test_covering_guarantee(tensor, cs6):
    cws = grid_codewords()
    for g in [(0, 1, 0, 0, 1, 0, 0, 0, 0), (1, 1, 0, 0, 0, 0, 0, 0, 0), (0, 0, 0, 0, 0, 0, 0, 0, 1)]:
        u = embed_word(g, 2)
        gamma = 1 / 3 + 0.1
        pe = solve_moment_sdp(cs6, CoveringObjective(u, gamma), params=PARAMS)
        v = pe_embed(pe)
        for c in cws:
            h = embed_word(c, 2)
            if u @ h > gamma:
                assert v @ h > gamma**2 - 1e-6


def test_unit_norm_required():
    with pytest.raises(ValueError):
        CoveringObjective(np.ones(4), 0.1)


def test_project_simplex_rows():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((6, 4)) * 3
    P = project_simplex_rows(X)
    assert np.allclose(P.sum(1), 1) and P.min() >= 0
    # optimality: P is closer than any vertex-mixture perturbation
    for i in range(6):
        for j, k in itertools.permutations(range(4), 2):
            if P[i, j] > 1e-9:
                Q = P[i].copy()
                s = min(Q[j], 1e-3)
                Q[j] -= s
                Q[k] += s
                assert np.sum((Q - X[i]) ** 2) >= np.sum((P[i] - X[i]) ** 2) - 1e-12


def test_project_product_halfspace_feasible():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((5, 3))
    c = rng.standard_normal((5, 3))
    gamma = 0.5 * c.max(1).sum()
    P = project_product_halfspace(X, c, gamma)
    assert np.allclose(P.sum(1), 1) and P.min() >= -1e-12
    assert np.sum(P * c) >= gamma - 1e-9


def test_product_qp_point_mass(concat):
    f = concat.outer.codewords()[5]
    w = concat.unchecked_encode(f)
    u = embed_word(w, 2)
    res = solve_product_qp(concat, u, 0.9, SolverParams(tol=1e-9, max_iters=200_000))
    assert res.margin >= 0.9 - 1e-7
    assert res.psi <= 1 + 1e-9
    idx = [concat.inverse_bijection[s] for s in concat.blocks(w)]
    assert all(res.dists[i, j] > 0.5 for i, j in enumerate(idx))


def test_product_qp_inactive_margin(concat):
    res = solve_product_qp(concat, embed_word((0,) * 12, 2), -1.0, SolverParams(tol=1e-10, max_iters=200_000))
    # parity codewords embed to a zero-sum set, so the uniform mixture is optimal
    assert res.psi == pytest.approx(0, abs=1e-9)
    assert np.allclose(res.dists, 0.25, atol=1e-4)


def test_antipodal_pair_balanced():
    a = np.array([[1.0, -1.0]])
    res = min_norm_product([a], np.array([1.0]), 0.0, SolverParams(tol=1e-12, max_iters=100_000))
    assert res.psi == pytest.approx(0, abs=1e-12)
    assert np.allclose(res.dists, 0.5)


def test_product_qp_infeasible(concat):
    with pytest.raises(Infeasible):
        solve_product_qp(concat, embed_word((1,) + (0,) * 11, 2), 0.99)


def test_concat_blocks_embed_unit_words(concat):
    blocks = concat_blocks(concat)
    f = concat.outer.codewords()[7]
    w = concat.unchecked_encode(f)
    idx = [concat.inverse_bijection[s] for s in concat.blocks(w)]
    v = sum(B[:, j] for B, j in zip(blocks, idx))
    assert np.allclose(v, embed_word(w, 2))


def test_product_qp_matches_cvxpy(concat):
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(2)
    w = tuple(int(x) for x in rng.integers(0, 2, 12))
    u = embed_word(w, 2)
    blocks = concat_blocks(concat)
    best = sum((u @ B).max() for B in blocks)
    gamma = 0.6 * best
    res = solve_product_qp(concat, u, gamma, SolverParams(tol=1e-10, max_iters=200_000))
    P = cp.Variable((len(blocks), blocks[0].shape[1]), nonneg=True)
    x = sum(B @ P[i] for i, B in enumerate(blocks))
    prob = cp.Problem(cp.Minimize(cp.sum_squares(x)), [cp.sum(P, axis=1) == 1, u @ x >= gamma])
    prob.solve()
    assert res.psi == pytest.approx(prob.value, abs=1e-5)
