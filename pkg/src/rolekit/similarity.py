"""Low-rank pairwise node-similarity factors for directed graphs.

Two measures are provided. The iterative measure accumulates counts of
common neighbourhood patterns of growing length, geometrically damped by a
scaling parameter ``beta``; its fixed point is approximated by a rank-r
factor X with S ~= X @ X.T, refined by a QR + truncated-SVD step per
iteration so the dense n x n similarity matrix is never formed. The Salton
index measure degree-normalizes the adjacency first and needs a single
truncated SVD, no iteration.

A dense fixed-point oracle (guarded to small graphs) backs the tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import DirectedGraph, degrees

__all__ = [
    "SimilarityFactor",
    "SimilarityConfig",
    "SpectralGapError",
    "DivergenceError",
    "initial_factor",
    "gamma_apply",
    "browet_factor",
    "salton_factor",
    "beta_estimate",
    "dense_oracle",
    "save_factor",
    "load_factor",
]

# Below this node count (or when the rank is too close to full) the exact
# LAPACK SVD is used; above it, ARPACK with a fixed start vector.
_DENSE_SVD_LIMIT = 400

_ORACLE_LIMIT = 200


class SpectralGapError(RuntimeError):
    """The spectrum carries no usable rank-r gap; pass an explicit beta."""


class DivergenceError(RuntimeError):
    """The similarity iteration produced non-finite values or failed to
    approach a fixed point."""

    def __init__(self, iteration: int, message: str):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass(frozen=True)
class SimilarityConfig:
    """Parameters of the iterative factor computation.

    ``beta`` balances long against short neighbourhood patterns; when None
    it is resolved through :func:`beta_estimate` (there is no silent
    numeric default). ``beta = 0`` collapses the measure to the one-step
    common parent/child counts.
    """

    r: int
    beta: float | None = None
    tol: float = 1e-6
    max_iter: int = 100

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("rank r must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.beta is not None and self.beta < 0:
            raise ValueError("beta must be >= 0")


@dataclass(frozen=True)
class SimilarityFactor:
    """Dense n x r factor X with S ~= X @ X.T.

    Columns are mutually orthogonal (U * sigma form of a truncated SVD)
    with non-increasing norms; compare Gram matrices, never X itself, as
    column signs are arbitrary.
    """

    X: np.ndarray
    r: int
    measure: str
    beta: float
    iterations: int
    converged: bool

    def gram(self) -> np.ndarray:
        """Materialize X @ X.T (small-graph diagnostics only)."""
        return self.X @ self.X.T


def _svds_start(dim: int) -> np.ndarray:
    # Fixed pseudo-random start keeps ARPACK deterministic and avoids
    # stalling when the all-ones vector is an exact eigenvector.
    rng = np.random.Generator(np.random.PCG64(0x5EED))
    return rng.random(dim) - 0.5


def _svd_factor(m, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Rank-r truncated SVD factor U_r * sigma_r of a (sparse) matrix.

    Returns (X, sigma) with X of shape (n, r); rank deficiency shows up as
    trailing zero columns.
    """
    n, c = m.shape
    k_max = min(n, c)
    if r > k_max:
        raise ValueError(f"rank {r} exceeds min dimension {k_max}")
    nnz = m.nnz if sp.issparse(m) else np.count_nonzero(m)
    if nnz == 0:
        return np.zeros((n, r)), np.zeros(r)
    if n <= _DENSE_SVD_LIMIT or r >= k_max // 2:
        a = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=float)
        u, s, _ = np.linalg.svd(a, full_matrices=False)
        u, s = u[:, :r], s[:r]
    else:
        u, s, _ = spla.svds(m, k=r, v0=_svds_start(k_max))
        order = np.argsort(s)[::-1]
        u, s = u[:, order], s[order]
    return u * s, s


def _leading_singular_values(m, k: int) -> np.ndarray:
    """Largest k singular values, descending, zero-padded past the rank."""
    n, c = m.shape
    k_max = min(n, c)
    want = min(k, k_max)
    nnz = m.nnz if sp.issparse(m) else np.count_nonzero(m)
    if nnz == 0:
        return np.zeros(k)
    if n <= _DENSE_SVD_LIMIT or want >= k_max // 2:
        a = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=float)
        s = np.linalg.svd(a, compute_uv=False)[:want]
    else:
        s = spla.svds(m, k=want, v0=_svds_start(k_max),
                      return_singular_vectors=False)
        s = np.sort(s)[::-1]
    out = np.zeros(k)
    out[:len(s)] = s
    return out


def _concat_adj(g: DirectedGraph) -> sp.csr_matrix:
    return sp.hstack([g.adj, g.adj_t], format="csr")


def initial_factor(g: DirectedGraph, r: int) -> np.ndarray:
    """First-iterate factor X1: rank-r truncated SVD factor of [A | A^T].

    X1 @ X1.T is the best rank-r approximation of the common parent/child
    count matrix A A^T + A^T A.
    """
    if r > g.n:
        raise ValueError(f"rank {r} exceeds node count {g.n}")
    x, _ = _svd_factor(_concat_adj(g), r)
    return x


def gamma_apply(g: DirectedGraph, x: np.ndarray) -> np.ndarray:
    """Sparse-dense products [A @ X | A^T @ X], cost O(|E| * r)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != g.n:
        raise ValueError(f"X must have shape ({g.n}, r), got {x.shape}")
    return np.hstack([g.adj @ x, g.adj_t @ x])


def _gram_rel_change(x_old: np.ndarray, x_new: np.ndarray) -> float:
    # ||S_new - S_old||_F / ||S_old||_F computed entirely through r x r and
    # n x r products: ||X X^T||_F^2 = ||X^T X||_F^2 and
    # <S_new, S_old> = ||X_old^T X_new||_F^2.
    with np.errstate(over="ignore", invalid="ignore"):
        g_new = float(np.linalg.norm(x_new.T @ x_new) ** 2)
        g_old = float(np.linalg.norm(x_old.T @ x_old) ** 2)
        cross = float(np.linalg.norm(x_old.T @ x_new) ** 2)
    if not np.isfinite([g_new, g_old, cross]).all():
        return np.inf
    num = np.sqrt(max(g_new + g_old - 2.0 * cross, 0.0))
    den = np.sqrt(g_old)
    if den == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return num / den


def browet_factor(g: DirectedGraph, cfg: SimilarityConfig) -> SimilarityFactor:
    """Iterative low-rank similarity factor.

    Starting from the rank-r truncation of the one-step counts, repeats

        Y_k = [X1 | beta A X_k | beta A^T X_k],   Y_k = Q_k R_k,
        X_{k+1} = Q_k U_k Omega_k   (truncated SVD of R_k, rank <= r),

    until the relative Frobenius change of X X^T drops below ``cfg.tol``
    or ``cfg.max_iter`` is hit. ``beta`` comes from the config or, when
    absent, from :func:`beta_estimate`.
    """
    beta = cfg.beta if cfg.beta is not None else beta_estimate(g, cfg.r)
    x1 = initial_factor(g, cfg.r)
    x = x1
    iterations = 1
    converged = True  # beta = 0: the first iterate is the fixed point
    if beta > 0:
        converged = False
        for it in range(2, cfg.max_iter + 1):
            with np.errstate(over="ignore", invalid="ignore"):
                y = np.hstack([x1, beta * (g.adj @ x), beta * (g.adj_t @ x)])
            if not np.isfinite(y).all():
                raise DivergenceError(it, "non-finite factor entries "
                                          "(beta too large?)")
            q, r_small = np.linalg.qr(y, mode="reduced")
            uu, ss, _ = np.linalg.svd(r_small, full_matrices=False)
            x_next = q @ (uu[:, :cfg.r] * ss[:cfg.r])
            if not np.isfinite(x_next).all():
                raise DivergenceError(it, "non-finite factor entries "
                                          "(beta too large?)")
            delta = _gram_rel_change(x, x_next)
            x = x_next
            iterations = it
            if delta <= cfg.tol:
                converged = True
                break
    return SimilarityFactor(X=x, r=cfg.r, measure="browet", beta=float(beta),
                            iterations=iterations, converged=converged)


def salton_factor(g: DirectedGraph, r: int) -> SimilarityFactor:
    """One-shot degree-normalized similarity factor.

    Rows of A are scaled by 1/sqrt(out-degree) and columns by
    1/sqrt(in-degree) (0/0 terms are 0), giving the fraction of shared
    children plus the fraction of shared parents; X is the rank-r
    truncated SVD factor of the concatenation [C | D^T].
    """
    if r > g.n:
        raise ValueError(f"rank {r} exceeds node count {g.n}")
    k_out, k_in = degrees(g)
    with np.errstate(divide="ignore"):
        row_scale = np.where(k_out > 0, 1.0 / np.sqrt(k_out), 0.0)
        col_scale = np.where(k_in > 0, 1.0 / np.sqrt(k_in), 0.0)
    c = g.adj.multiply(row_scale[:, None]).tocsr()
    d = g.adj.multiply(col_scale[None, :]).tocsr()
    m = sp.hstack([c, d.T], format="csr")
    x, _ = _svd_factor(m, r)
    return SimilarityFactor(X=x, r=r, measure="salton", beta=0.0,
                            iterations=1, converged=True)


def beta_estimate(g: DirectedGraph, r: int) -> float:
    """Scaling parameter guaranteed to keep the iteration convergent.

    Evaluates the sufficient bound
    beta^2 < 1 / (F * (8 * s1 / gap + 1)) with F an upper bound on the
    Frobenius norm of the doubled Kronecker operator (2 ||A||_F^2 for
    binary A), s1 the largest squared singular value of [A | A^T], and
    gap the difference between the r-th and (r+1)-th squared singular
    values; returns 0.99 * sqrt(bound). Reading the gap off the first
    iterate is one defensible choice among several; pass an explicit beta
    to override it.
    """
    if g.num_edges == 0:
        raise SpectralGapError("empty graph has no spectrum")
    if r > g.n:
        raise ValueError(f"rank {r} exceeds node count {g.n}")
    sigma = _leading_singular_values(_concat_adj(g), r + 1)
    sigma_sq = sigma ** 2
    gap = sigma_sq[r - 1] - sigma_sq[r]
    if gap <= 1e-12 * max(sigma_sq[0], 1.0):
        raise SpectralGapError(
            f"squared singular values {sigma_sq[r - 1]:.6g} and "
            f"{sigma_sq[r]:.6g} leave no rank-{r} gap; pass an explicit beta")
    fro_bound = 2.0 * g.num_edges
    bound_sq = 1.0 / (fro_bound * (8.0 * sigma_sq[0] / gap + 1.0))
    return 0.99 * float(np.sqrt(bound_sq))


def dense_oracle(g: DirectedGraph, beta: float, tol: float = 1e-10,
                 max_iter: int = 1000) -> np.ndarray:
    """Dense fixed point S* of S_{k+1} = S1 + beta^2 (A S_k A^T + A^T S_k A).

    Test-only reference; guarded to n <= 200.
    """
    if g.n > _ORACLE_LIMIT:
        raise ValueError(f"dense oracle limited to n <= {_ORACLE_LIMIT}")
    a = g.adj.toarray()
    s1 = a @ a.T + a.T @ a
    s = np.zeros_like(s1)
    for it in range(1, max_iter + 1):
        s_next = s1 + beta ** 2 * (a @ s @ a.T + a.T @ s @ a)
        if not np.isfinite(s_next).all():
            raise DivergenceError(it, "non-finite similarity values")
        if np.linalg.norm(s_next - s) <= tol * np.linalg.norm(s):
            return s_next
        s = s_next
    raise DivergenceError(max_iter, "fixed point not reached; beta too large "
                                    "or max_iter too small")


# ---------------------------------------------------------------------------
# Factor export
# ---------------------------------------------------------------------------

def save_factor(factor: SimilarityFactor, csv_path, sidecar_path) -> None:
    """Write X as CSV plus a JSON sidecar with the run metadata."""
    np.savetxt(csv_path, factor.X, delimiter=",", fmt="%.17g")
    meta = {"measure": factor.measure, "r": factor.r, "beta": factor.beta,
            "iterations": factor.iterations, "converged": factor.converged}
    with open(sidecar_path, "w") as fh:
        json.dump(meta, fh, indent=2)


def load_factor(csv_path, sidecar_path) -> SimilarityFactor:
    x = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    return SimilarityFactor(X=x, r=int(meta["r"]), measure=meta["measure"],
                            beta=float(meta["beta"]),
                            iterations=int(meta["iterations"]),
                            converged=bool(meta["converged"]))
