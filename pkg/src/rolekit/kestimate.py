"""Estimating the number of roles from a rank-r factor.

Three strategies: a downward scan of candidate counts accepting the first
validated clustering (k-moving), agglomerative merging of over-clustered
sub-cluster centroids until no pair stays collinear (hierarchical), and
reading the count off a gap in the singular values of the factor (svd).
k = 0 signals that no acceptable classification exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clustering import (BETWEEN_THRESHOLD, DEFAULT_MAX_ITER,
                         DEFAULT_MAX_RESTARTS, WITHIN_THRESHOLD,
                         ClusterValidation, DegenerateDataError,
                         cluster_validated, normalize_rows)
from .graph import RolePartition

__all__ = [
    "KEstimateResult",
    "EstimateConfig",
    "DEFAULT_GAP_FACTOR",
    "k_moving",
    "hierarchical_estimate",
    "svd_estimate",
]

DEFAULT_GAP_FACTOR = 3.0


@dataclass(frozen=True)
class EstimateConfig:
    within_threshold: float = WITHIN_THRESHOLD
    between_threshold: float = BETWEEN_THRESHOLD
    max_restarts: int = DEFAULT_MAX_RESTARTS
    max_iter: int = DEFAULT_MAX_ITER


@dataclass(frozen=True)
class KEstimateResult:
    """Estimated role count with per-step diagnostics.

    ``labels`` and ``validation`` carry the clustering backing the
    estimate when the method produced one (k > 0 for k-moving, always for
    hierarchical); the svd method estimates from the spectrum alone.
    """

    k: int
    method: str
    trace: dict = field(default_factory=dict)
    labels: RolePartition | None = None
    validation: ClusterValidation | None = None


def k_moving(x: np.ndarray, r: int, rng: np.random.Generator,
             cfg: EstimateConfig | None = None) -> KEstimateResult:
    """Try k = r, r-1, ..., 1 and accept the first validated clustering.

    Over-estimated k splits a role across clusters, leaving collinear
    centroids that fail the between-cluster condition, so the scan walks
    down until the conditions hold; k = 0 means none did.
    """
    cfg = cfg or EstimateConfig()
    if r < 1:
        raise ValueError("r must be >= 1")
    steps = []
    streams = rng.spawn(r)
    for stream, k in zip(streams, range(r, 0, -1)):
        try:
            model, val = cluster_validated(
                x, k, stream, max_restarts=cfg.max_restarts,
                within_threshold=cfg.within_threshold,
                between_threshold=cfg.between_threshold,
                max_iter=cfg.max_iter)
        except DegenerateDataError:
            steps.append({"k": k, "passed": False})
            continue
        steps.append({"k": k, "passed": bool(val.passed),
                      "min_within": val.min_within,
                      "max_between": val.max_between})
        if val.passed:
            return KEstimateResult(k=k, method="k_moving",
                                   trace={"steps": steps},
                                   labels=model.labels, validation=val)
    return KEstimateResult(k=0, method="k_moving", trace={"steps": steps})


def hierarchical_estimate(x: np.ndarray, r: int, rng: np.random.Generator,
                          cfg: EstimateConfig | None = None) -> KEstimateResult:
    """Over-cluster to r sub-clusters, merge collinear centroids, recluster.

    The preliminary k-means asks only for co-linearity within sub-clusters.
    While some pair of unit-normalized centroids has inner product above
    the between threshold, the pair of centroids at minimum squared
    distance is merged (size-weighted mean); the surviving group count is
    k and the final partition comes from a validated k-means at that k.
    """
    cfg = cfg or EstimateConfig()
    if r < 1:
        raise ValueError("r must be >= 1")
    sub_rng, final_rng = rng.spawn(2)
    model, _ = cluster_validated(
        x, r, sub_rng, max_restarts=cfg.max_restarts,
        within_threshold=cfg.within_threshold,
        between_threshold=cfg.between_threshold,
        max_iter=cfg.max_iter, require_between=False)
    centroids = model.centroids.copy()
    sizes = model.labels.cluster_sizes().astype(float)
    merges = []
    prev_dist = -np.inf
    while centroids.shape[0] > 1:
        cn, _ = normalize_rows(centroids)
        gram = cn @ cn.T
        np.fill_diagonal(gram, -np.inf)
        if gram.max() <= cfg.between_threshold:
            break
        diffs = centroids[:, None, :] - centroids[None, :, :]
        d2 = np.einsum("abk,abk->ab", diffs, diffs)
        np.fill_diagonal(d2, np.inf)
        a, b = np.unravel_index(np.argmin(d2), d2.shape)
        a, b = (int(a), int(b)) if a < b else (int(b), int(a))
        dist = float(d2[a, b])
        assert dist >= prev_dist - 1e-9, \
            f"merge distance decreased: {prev_dist} -> {dist}"
        prev_dist = dist
        merges.append({"pair": [a, b], "distance": dist})
        merged = (sizes[a] * centroids[a] + sizes[b] * centroids[b]) \
            / (sizes[a] + sizes[b])
        centroids[a] = merged
        sizes[a] += sizes[b]
        centroids = np.delete(centroids, b, axis=0)
        sizes = np.delete(sizes, b)
    k = centroids.shape[0]
    final_model, final_val = cluster_validated(
        x, k, final_rng, max_restarts=cfg.max_restarts,
        within_threshold=cfg.within_threshold,
        between_threshold=cfg.between_threshold, max_iter=cfg.max_iter)
    return KEstimateResult(k=k, method="hierarchical",
                           trace={"initial_subclusters": r, "merges": merges},
                           labels=final_model.labels, validation=final_val)


def svd_estimate(x: np.ndarray, r: int,
                 gap_factor: float = DEFAULT_GAP_FACTOR) -> KEstimateResult:
    """Read the cluster count off the singular-value profile of the factor.

    q is the position of the decisive drop: among all q with
    sigma_q / sigma_{q+1} >= gap_factor, the one with the largest ratio
    (largest q on ties). Singular values below the numerical noise floor
    count as zero, so a drop to the noise floor qualifies while ratios of
    round-off artifacts do not. A zero factor carries no gap (k = 0); a
    profile that is flat at a nonzero level means every retained direction
    is equally strong, i.e. the factor is saturated, and reads as q = r.
    k = 0 when the profile carries no decisive drop.
    """
    if r < 2:
        raise ValueError("r must be >= 2")
    x = np.asarray(x, dtype=float)
    sigma_raw = np.linalg.svd(x, compute_uv=False)
    sigma = np.zeros(r)
    sigma[:min(r, len(sigma_raw))] = sigma_raw[:r]
    trace = {"sigma": sigma.tolist(), "gap_factor": gap_factor, "q": 0}
    if sigma[0] <= 0.0:
        return KEstimateResult(k=0, method="svd", trace=trace)
    if sigma[0] - sigma[-1] <= max(1e-12, 1e-9 * sigma[0]):
        trace["q"] = r
        return KEstimateResult(k=r, method="svd", trace=trace)
    floor = sigma[0] * max(x.shape) * np.finfo(float).eps
    sig = np.where(sigma > floor, sigma, 0.0)
    ratios = np.full(r - 1, -np.inf)
    for q in range(1, r):
        hi, lo = sig[q - 1], sig[q]
        if hi == 0.0:
            continue
        ratios[q - 1] = np.inf if lo == 0.0 else hi / lo
    qualifying = np.nonzero(ratios >= gap_factor)[0]
    if qualifying.size == 0:
        return KEstimateResult(k=0, method="svd", trace=trace)
    best = ratios[qualifying].max()
    q = int(np.nonzero(ratios == best)[0][-1]) + 1
    trace["q"] = q
    return KEstimateResult(k=q, method="svd", trace=trace)
