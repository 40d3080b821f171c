import numpy as np
import pytest

import rolekit as rk
from rolekit.similarity import beta_estimate
from conftest import BLOCKS5, CYCLE3, rng


def salton_dense(g):
    """Direct dense evaluation of the degree-normalized similarity."""
    a = g.adj.toarray()
    k_out, k_in = rk.degrees(g)
    c = np.divide(a, np.sqrt(k_out)[:, None], out=np.zeros_like(a),
                  where=k_out[:, None] > 0)
    d = np.divide(a, np.sqrt(k_in)[None, :], out=np.zeros_like(a),
                  where=k_in[None, :] > 0)
    return c @ c.T + d.T @ d


# ---------------------------------------------------------------------------
# initial factor
# ---------------------------------------------------------------------------

def test_initial_factor_cycle3_spectrum(cycle3_noiseless):
    # analytic: the one-step count matrix is block-diagonal with three
    # all-ones blocks scaled by 100, eigenvalue 5000 of multiplicity 3
    g, _ = cycle3_noiseless
    x1 = rk.initial_factor(g, 3)
    sigma = np.linalg.norm(x1, axis=0)
    assert np.allclose(sigma, np.sqrt(5000), atol=1e-6)


def test_initial_factor_empty_graph():
    g = rk.DirectedGraph.from_edges(5, [])
    assert not rk.initial_factor(g, 3).any()


def test_initial_factor_single_edge():
    g = rk.DirectedGraph.from_edges(2, [(0, 1)])
    x1 = rk.initial_factor(g, 2)
    assert np.allclose(x1 @ x1.T, np.eye(2), atol=1e-12)


def test_initial_factor_best_rank_r(cycle3_noisy):
    g, _ = cycle3_noisy
    x1 = rk.initial_factor(g, 4)
    a = g.adj.toarray()
    s1 = a @ a.T + a.T @ a
    w = np.sort(np.linalg.eigvalsh(s1))[::-1]
    best = np.sqrt(np.sum(w[4:] ** 2))
    assert np.linalg.norm(x1 @ x1.T - s1) <= best * (1 + 1e-8)


def test_initial_factor_rank_cap():
    g = rk.DirectedGraph.from_edges(3, [(0, 1)])
    with pytest.raises(ValueError):
        rk.initial_factor(g, 4)


# ---------------------------------------------------------------------------
# gamma operator
# ---------------------------------------------------------------------------

def test_gamma_zero():
    g = rk.DirectedGraph.from_edges(3, [(0, 1), (1, 2)])
    assert not rk.gamma_apply(g, np.zeros((3, 2))).any()


def test_gamma_indicator_columns():
    g = rk.DirectedGraph.from_edges(2, [(0, 1)])
    x = np.eye(2)
    out = rk.gamma_apply(g, x)
    a = g.adj.toarray()
    assert np.array_equal(out[:, :2], a @ x)
    assert np.array_equal(out[:, 2:], a.T @ x)


def test_gamma_matches_dense_product():
    spec = rk.BenchmarkSpec(B=CYCLE3, sizes=[10, 10, 10], p_in=0.7,
                            p_out=0.2, seed=8)
    g, _ = rk.generate_planted(spec)
    x = rng(5).random((30, 4))
    a = g.adj.toarray()
    assert np.allclose(rk.gamma_apply(g, x),
                       np.hstack([a @ x, a.T @ x]), atol=1e-12)


def test_gamma_dimension_mismatch():
    g = rk.DirectedGraph.from_edges(3, [(0, 1)])
    with pytest.raises(ValueError):
        rk.gamma_apply(g, np.zeros((4, 2)))


# ---------------------------------------------------------------------------
# iterative factor
# ---------------------------------------------------------------------------

def test_browet_beta_zero_is_initial_factor(cycle3_noisy):
    g, _ = cycle3_noisy
    f = rk.browet_factor(g, rk.SimilarityConfig(r=3, beta=0.0))
    x1 = rk.initial_factor(g, 3)
    assert f.iterations == 1 and f.converged
    assert np.allclose(f.gram(), x1 @ x1.T, atol=1e-9)


def test_browet_matches_oracle_small_graph():
    spec = rk.BenchmarkSpec(B=[[0, 1], [1, 0]], sizes=[10, 10], p_in=0.9,
                            p_out=0.1, seed=13)
    g, _ = rk.generate_planted(spec)
    beta = beta_estimate(g, g.n)
    f = rk.browet_factor(g, rk.SimilarityConfig(r=g.n, beta=beta, tol=1e-10,
                                                max_iter=200))
    oracle = rk.dense_oracle(g, beta, tol=1e-12)
    assert np.abs(f.gram() - oracle).max() <= 1e-6


def test_browet_oracle_equivalence_n50():
    spec = rk.BenchmarkSpec(B=CYCLE3, sizes=[17, 17, 16], p_in=0.8,
                            p_out=0.15, seed=21)
    g, _ = rk.generate_planted(spec)
    beta = beta_estimate(g, g.n)
    f = rk.browet_factor(g, rk.SimilarityConfig(r=g.n, beta=beta, tol=1e-10,
                                                max_iter=200))
    assert np.abs(f.gram() - rk.dense_oracle(g, beta, tol=1e-12)).max() <= 1e-6


def test_browet_noiseless_inner_products_binary():
    # 200 nodes per block: after row normalization every pairwise inner
    # product is 0 or 1 up to 1e-8
    spec = rk.BenchmarkSpec(B=BLOCKS5, sizes=[200] * 5, p_in=1.0, p_out=0.0,
                            seed=0)
    g, _ = rk.generate_planted(spec)
    f = rk.browet_factor(g, rk.SimilarityConfig(r=5))
    xn, _ = rk.normalize_rows(f.X)
    gram = xn @ xn.T
    dist_to_binary = np.minimum(np.abs(gram), np.abs(gram - 1.0))
    assert dist_to_binary.max() <= 1e-8


def test_browet_divergence_error():
    spec = rk.BenchmarkSpec(B=CYCLE3, sizes=[20, 20, 20], p_in=0.9,
                            p_out=0.1, seed=2)
    g, _ = rk.generate_planted(spec)
    with pytest.raises(rk.DivergenceError, match="iteration"):
        rk.browet_factor(g, rk.SimilarityConfig(r=3, beta=1e150, max_iter=30))


def test_browet_nonnegative_entries_noiseless(cycle3_noiseless):
    g, _ = cycle3_noiseless
    f = rk.browet_factor(g, rk.SimilarityConfig(r=3))
    assert f.gram().min() >= -1e-9


def test_factor_columns_orthogonal(cycle3_noisy):
    g, _ = cycle3_noisy
    for f in (rk.browet_factor(g, rk.SimilarityConfig(r=4)),
              rk.salton_factor(g, 4)):
        gram = f.X.T @ f.X
        off = gram - np.diag(np.diag(gram))
        assert np.abs(off).max() <= 1e-8 * max(gram.max(), 1.0)
        norms = np.linalg.norm(f.X, axis=0)
        assert (np.diff(norms) <= 1e-9).all()


# ---------------------------------------------------------------------------
# salton factor
# ---------------------------------------------------------------------------

def test_salton_shared_parent_and_child():
    # nodes 1 and 2 share their only parent (0) and only child (3)
    g = rk.load_edge_list("0 1\n0 2\n1 3\n2 3\n")
    s = rk.salton_factor(g, 4).gram()
    assert abs(s[1, 2] - 2.0) <= 1e-10


def test_salton_diagonal_two():
    spec = rk.BenchmarkSpec(B=CYCLE3, sizes=[8, 8, 8], p_in=0.9, p_out=0.2,
                            seed=31)
    g, _ = rk.generate_planted(spec)
    k_out, k_in = rk.degrees(g)
    s = rk.salton_factor(g, g.n).gram()
    active = (k_out > 0) & (k_in > 0)
    assert np.allclose(np.diag(s)[active], 2.0, atol=1e-10)


def test_salton_isolated_node_zero_row():
    g = rk.DirectedGraph.from_edges(4, [(0, 1), (1, 2)])
    f = rk.salton_factor(g, 3)
    assert np.linalg.norm(f.X[3]) == 0.0


def test_salton_full_rank_matches_dense():
    spec = rk.BenchmarkSpec(B=[[1, 1], [0, 1]], sizes=[20, 20], p_in=0.7,
                            p_out=0.2, seed=5)
    g, _ = rk.generate_planted(spec)
    f = rk.salton_factor(g, g.n)
    assert np.abs(f.gram() - salton_dense(g)).max() <= 1e-10
    assert f.iterations == 1 and f.beta == 0.0


def test_salton_nonnegative_noiseless(cycle3_noiseless):
    g, _ = cycle3_noiseless
    assert rk.salton_factor(g, 3).gram().min() >= -1e-9


# ---------------------------------------------------------------------------
# beta estimate
# ---------------------------------------------------------------------------

def test_beta_estimate_empty_graph():
    with pytest.raises(rk.SpectralGapError):
        beta_estimate(rk.DirectedGraph.from_edges(4, []), 2)


def test_beta_estimate_cycle3_hand_value(cycle3_noiseless):
    # |E| = 7500, top squared singular value 5000, gap 5000 - 0:
    # bound = 1 / (2 * 7500 * (8 * 5000/5000 + 1)) = 1/135000
    g, _ = cycle3_noiseless
    beta = beta_estimate(g, 3)
    assert beta == pytest.approx(0.99 / np.sqrt(135000), rel=1e-9)


def test_beta_estimate_zero_gap():
    g, _ = rk.generate_planted(rk.BenchmarkSpec(
        B=CYCLE3, sizes=[10, 10, 10], p_in=1.0, p_out=0.0, seed=0))
    with pytest.raises(rk.SpectralGapError, match="explicit beta"):
        beta_estimate(g, 5)  # rank is 3; the 4th..6th values vanish


def test_beta_estimate_keeps_iteration_stable():
    for seed in range(50):
        spec = rk.BenchmarkSpec(B=CYCLE3, sizes=[20, 20, 20], p_in=0.8,
                                p_out=0.2, seed=seed)
        g, _ = rk.generate_planted(spec)
        beta = beta_estimate(g, 3)
        f = rk.browet_factor(g, rk.SimilarityConfig(r=3, beta=beta))
        assert f.converged and np.isfinite(f.X).all()


# ---------------------------------------------------------------------------
# dense oracle
# ---------------------------------------------------------------------------

def test_oracle_beta_zero_is_one_step_counts():
    spec = rk.BenchmarkSpec(B=CYCLE3, sizes=[5, 5, 5], p_in=0.8, p_out=0.2,
                            seed=17)
    g, _ = rk.generate_planted(spec)
    a = g.adj.toarray()
    assert np.allclose(rk.dense_oracle(g, 0.0), a @ a.T + a.T @ a)


def test_oracle_symmetric():
    spec = rk.BenchmarkSpec(B=[[0, 1], [1, 1]], sizes=[8, 8], p_in=0.7,
                            p_out=0.3, seed=23)
    g, _ = rk.generate_planted(spec)
    s = rk.dense_oracle(g, 0.05)
    assert np.abs(s - s.T).max() <= 1e-9


def test_oracle_two_node_fixed_point():
    # single edge, beta=0.1: the recursion couples the two diagonal
    # entries, s00 = 1 + beta^2 s11 and s11 = 1 + beta^2 s00, giving
    # 1 / (1 - beta^2) on the diagonal and zero off it
    g = rk.DirectedGraph.from_edges(2, [(0, 1)])
    s = rk.dense_oracle(g, 0.1, tol=1e-14)
    expected = np.diag([1.0 / 0.99, 1.0 / 0.99])
    assert np.allclose(s, expected, atol=1e-12)


def test_oracle_guard():
    g = rk.DirectedGraph.from_edges(500, [(0, 1)])
    with pytest.raises(ValueError, match="n <= 200"):
        rk.dense_oracle(g, 0.1)


# ---------------------------------------------------------------------------
# factor export
# ---------------------------------------------------------------------------

def test_factor_export_roundtrip(tmp_path, cycle3_noisy):
    from rolekit.similarity import load_factor, save_factor
    g, _ = cycle3_noisy
    f = rk.browet_factor(g, rk.SimilarityConfig(r=3))
    save_factor(f, tmp_path / "x.csv", tmp_path / "x.json")
    again = load_factor(tmp_path / "x.csv", tmp_path / "x.json")
    assert np.allclose(again.X, f.X, atol=1e-15)
    assert (again.measure, again.r, again.beta, again.iterations,
            again.converged) == (f.measure, f.r, f.beta, f.iterations,
                                 f.converged)
