import itertools

import numpy as np
import pytest

from conftest import grid_codewords
from expdec.pseudoexp import (
    ConditioningError,
    DegreeError,
    MatrixPE,
    MixturePE,
    ProductPE,
    basis_build,
    basis_size,
    check_axioms,
    compile_constraints,
    condition,
    local_distribution,
    pseudo_cov,
    pseudo_var,
)


@pytest.mark.parametrize("m, q, t, size", [(4, 2, 8, 81), (9, 2, 6, 835), (5, 3, 0, 1), (3, 3, 2, 10)])
def test_basis_size(m, q, t, size):
    assert basis_size(m, q, t) == size
    assert len(basis_build(m, q, t)) == size


def test_integral_pe():
    w = (0, 1, 1, 0, 1, 1, 0, 0, 0)
    pe = MixturePE([w], t=4)
    M = pe.moment_matrix()
    assert set(np.unique(M)) <= {0.0, 1.0}
    assert np.linalg.matrix_rank(M) == 1
    for S in [(0,), (2, 5), (1, 4)]:
        p = local_distribution(pe, S)
        expect = np.zeros(2 ** len(S))
        expect[int("".join(str(w[v]) for v in S), 2)] = 1
        assert np.array_equal(p, expect)
    assert np.array_equal(local_distribution(pe, ()), [1.0])


def test_mixture_point_mass_on_agreement():
    pe = MixturePE([(0, 1, 1), (0, 0, 1)])
    assert np.array_equal(pe.joint((0,)), [1, 0])
    assert np.allclose(pe.joint((1,)), [0.5, 0.5])


def test_two_atom_local_distribution():
    pe = MixturePE([(0, 0, 1), (1, 1, 1)], weights=[0.3, 0.7])
    assert np.allclose(local_distribution(pe, (0, 1)), [0.3, 0, 0, 0.7])


def test_tensor_uniform_marginals():
    pe = MixturePE(grid_codewords(), t=6)
    assert np.allclose(pe.marginals(), 0.5)


def test_local_distribution_degree_bound():
    pe = MixturePE([(0, 1, 0, 1)], t=2)
    with pytest.raises(DegreeError):
        local_distribution(pe, (0, 1))


def test_pseudo_var_and_cov():
    integral = MixturePE([(1, 0, 1)])
    assert pseudo_var(integral, (0, 1)) == 0 and pseudo_cov(integral, (0,), (2,)) == 0
    anti = MixturePE([(0, 0, 0), (1, 1, 1)])
    for v in range(3):
        assert pseudo_var(anti, (v,)) == pytest.approx(0.5)
    assert pseudo_cov(anti, (0,), (1,)) == pytest.approx(1.0)
    rng = np.random.default_rng(1)
    P = rng.dirichlet(np.ones(3), size=4)
    prod = ProductPE(P)
    assert pseudo_cov(prod, (0, 1), (2, 3)) == pytest.approx(0, abs=1e-12)
    assert pseudo_var(prod, (0,)) == pytest.approx(np.sum(P[0] - P[0] ** 2))


def test_pseudo_var_bounded_by_one():
    rng = np.random.default_rng(2)
    for _ in range(50):
        words = rng.integers(0, 3, size=(5, 4))
        pe = MixturePE(words, weights=rng.dirichlet(np.ones(5)), q=3)
        for S in [(0,), (1, 2), (0, 1, 3)]:
            assert pseudo_var(pe, S) <= 1 + 1e-12


def test_condition_integral_unchanged():
    w = (1, 0, 1, 1)
    pe = MixturePE([w], t=4)
    c = condition(pe, (0,), (1,))
    assert c.t == 2
    for S in [(1,), (2, 3)]:
        assert np.array_equal(c.joint(S), pe.joint(S))


def test_condition_splits_mixture():
    pe = MixturePE([(0, 0, 1, 1), (1, 1, 0, 1)], t=4)
    c = condition(pe, (0,), (1,))
    assert np.allclose(c.marginals(), MixturePE([(1, 1, 0, 1)]).marginals())


def test_condition_zero_event():
    pe = MixturePE([(0, 0), (0, 1)])
    with pytest.raises(ConditioningError):
        condition(pe, (0,), (1,))
    with pytest.raises(DegreeError):
        condition(MixturePE([(0, 0)], t=0), (0,), (0,))


def test_total_expectation_identity():
    rng = np.random.default_rng(3)
    words = rng.integers(0, 2, size=(6, 6))
    pe = MixturePE(words, weights=rng.dirichlet(np.ones(6)), t=6)
    V = (1, 4)
    X = (0, 2)
    total = np.zeros(4)
    for gamma, p in zip(itertools.product(range(2), repeat=2), pe.joint(V)):
        if p > 1e-12:
            total += p * condition(pe, V, gamma).joint(X)
    assert np.allclose(total, pe.joint(X), atol=1e-12)


def test_constraints_repetition_k22(k22):
    cs = compile_constraints(k22, t=4)
    nbr = k22.neighborhoods()[0]
    a, b = sorted(nbr)
    assert cs.forbids(((a, 0), (b, 1)))
    assert not cs.forbids(((a, 1), (b, 1)))
    assert cs.residual(MixturePE([(0,) * 4], t=4))[0] == 0
    assert cs.residual(MixturePE([(0,) * 4, (1,) * 4], t=4))[0] == 0
    assert cs.residual(MixturePE([(0, 1, 0, 1)], t=4))[0] == 1


def test_constraints_tensor_uniform(tensor):
    cs = compile_constraints(tensor, t=6)
    assert cs.residual(MixturePE(grid_codewords(), t=6))[0] == 0
    with pytest.raises(DegreeError):
        compile_constraints(tensor, t=4)


def test_check_axioms_mixture():
    rng = np.random.default_rng(4)
    pe = MixturePE(rng.integers(0, 3, size=(4, 4)), weights=rng.dirichlet(np.ones(4)), q=3, t=4)
    assert check_axioms(pe, tol=1e-12).passed


def test_check_axioms_perturbed_entry():
    B = basis_build(3, 2, 2)
    M = MixturePE([(0, 1, 1), (1, 1, 0)], t=2).moment_matrix()
    idx = B.index
    i, j = idx[((0, 1),)], idx[((1, 1),)]
    M[i, j] += 1e-3
    rep = check_axioms(MatrixPE(B, M), tol=1e-6)
    assert rep.consistency == pytest.approx(1e-3)
    assert not rep.passed


def test_check_axioms_negative_block():
    B = basis_build(2, 2, 2)
    M = -np.eye(len(B))
    M[0, 0] = 1.0
    rep = check_axioms(MatrixPE(B, M), tol=1e-8)
    assert not rep.psd_ok
    assert any("psd" in f for f in rep.failures())
