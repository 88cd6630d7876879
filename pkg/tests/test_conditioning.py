import itertools

import numpy as np
import pytest

from expdec.conditioning import avg_lr_cov, make_eta_good, phi_k, variance_potential
from expdec.instances import tensor_code
from expdec.pseudoexp import DegreeError, MixturePE, ProductPE, compile_constraints
from expdec.solver import CoveringObjective, SolverParams, solve_moment_sdp
from expdec.covering import embed_word

C1 = (0,) * 9
C2 = (0, 1, 1, 0, 1, 1, 0, 0, 0)


def brute_lr_cov(words, weights, graph):
    """Average left-right covariance straight from the word distribution."""
    tot = 0.0
    for l, r in itertools.product(range(graph.n), repeat=2):
        S, T = graph.left_order[l], graph.right_order[r]
        joint, ps, pt = {}, {}, {}
        for w, p in zip(words, weights):
            a, b = tuple(w[v] for v in S), tuple(w[v] for v in T)
            joint[a, b] = joint.get((a, b), 0) + p
            ps[a] = ps.get(a, 0) + p
            pt[b] = pt.get(b, 0) + p
        q = max(max(w) for w in words) + 1
        q = max(q, 2)
        for a in itertools.product(range(q), repeat=len(S)):
            for b in itertools.product(range(q), repeat=len(T)):
                tot += abs(joint.get((a, b), 0) - ps.get(a, 0) * pt.get(b, 0))
    return tot / graph.n**2


def test_integral_goodness(tensor):
    assert avg_lr_cov(MixturePE([C2], t=6), tensor.graph).eta_hat == 0


def test_two_codeword_mixture(tensor):
    for w in (0.5, 0.3):
        pe = MixturePE([C1, C2], [1 - w, w], t=6)
        rep = avg_lr_cov(pe, tensor.graph)
        # two rows and two columns separate the words
        assert rep.eta_hat == pytest.approx(4 * w * (1 - w) * 4 / 9)
        assert rep.eta_hat == pytest.approx(brute_lr_cov([C1, C2], [1 - w, w], tensor.graph))


def test_product_pe_shared_edge_only(tensor):
    rng = np.random.default_rng(0)
    P = rng.dirichlet(np.ones(2), size=9)
    rep = avg_lr_cov(ProductPE(P, t=6), tensor.graph)
    # the only dependence is the single edge shared by N_L(l) and N_R(r)
    expect = np.mean([np.sum(np.abs(np.diag(p) - np.outer(p, p))) for p in P])
    assert rep.eta_hat == pytest.approx(expect)


def test_random_mixture_against_brute(tensor):
    rng = np.random.default_rng(1)
    words = [tuple(int(x) for x in rng.integers(0, 2, 9)) for _ in range(4)]
    wts = rng.dirichlet(np.ones(4))
    assert avg_lr_cov(MixturePE(words, wts, t=6), tensor.graph).eta_hat == pytest.approx(
        brute_lr_cov(words, wts, tensor.graph)
    )


def test_degree_guard(tensor):
    with pytest.raises(DegreeError):
        avg_lr_cov(MixturePE([C1], t=4), tensor.graph)


def test_reference_tau(tensor):
    rep = avg_lr_cov(MixturePE([C1, C2], t=6), tensor.graph, reference=C1)
    # half the mass misses C1 on two of three neighborhoods, each side
    assert rep.tau == pytest.approx(1 / 3)


def test_variance_potential(tensor):
    g = tensor.graph
    pe = MixturePE([C1, C2], t=6)
    assert variance_potential(pe, g) == pytest.approx(1 / 3)
    assert variance_potential(MixturePE([C2], t=6), g, (0,)) == 0
    diff = [r for r in range(3) if any(C1[e] != C2[e] for e in g.right_order[r])]
    assert variance_potential(pe, g, (diff[0],)) == 0
    same = [r for r in range(3) if r not in diff][0]
    assert variance_potential(pe, g, (same,)) == pytest.approx(1 / 3)
    assert phi_k(pe, g, 1) == pytest.approx(1 / 9)


def test_integral_input_unchanged(tensor):
    pe = MixturePE([C2], t=12)
    for mode in ("sample", "exhaustive"):
        br = make_eta_good(pe, tensor.graph, 0.01, k_max=1, mode=mode)[0]
        assert br.pe is pe and br.vertices == () and br.report.eta_hat == 0


def test_k22_mixture_splits(k22):
    pe = MixturePE([(0,) * 4, (1,) * 4], t=8)
    branches = make_eta_good(pe, k22.graph, 0.01, k_max=1, mode="exhaustive")
    assert branches[0].report.eta_hat == pytest.approx(1.0)
    assert any(b.vertices and b.report.eta_hat == 0 for b in branches)
    assert sum(b.mass for b in branches if len(b.vertices) == 1) == pytest.approx(2.0)
    (b,) = make_eta_good(pe, k22.graph, 0.01, k_max=1, mode="sample", seed=3)
    assert b.report.eta_hat == 0 and len(b.vertices) == 1
    assert b.trace.monotone()


def test_solver_pe_zero_budget(tensor):
    cs = compile_constraints(tensor, 6)
    pe = solve_moment_sdp(cs, CoveringObjective(embed_word((0, 1, 0, 0, 1, 0, 0, 0, 0), 2), 0.43), params=SolverParams(tol=1e-7))
    (b,) = make_eta_good(pe, tensor.graph, 10.0, k_max=0)
    assert b.pe is pe and b.report.eta_hat > 0


def test_exhaustive_degree_cutoff(tensor):
    pe = MixturePE([C1, C2], t=16)
    branches = make_eta_good(pe, tensor.graph, 1e-3, k_max=2, mode="exhaustive")
    # t - 2dk >= 2d allows k = 1 only
    assert max(len(b.vertices) for b in branches) == 1


def test_monotone_traces():
    code = tensor_code()
    rng = np.random.default_rng(2)
    for _ in range(10):
        words = code.codewords()
        pick = rng.choice(len(words), 3, replace=False)
        pe = MixturePE([words[i] for i in pick], rng.dirichlet(np.ones(3)), t=18)
        for b in make_eta_good(pe, code.graph, 1e-6, k_max=2, mode="exhaustive"):
            assert b.trace.monotone()


def test_invalid_arguments(k22):
    pe = MixturePE([(0,) * 4], t=8)
    with pytest.raises(ValueError):
        make_eta_good(pe, k22.graph, 0.0)
    with pytest.raises(ValueError):
        make_eta_good(pe, k22.graph, 0.1, mode="greedy")
