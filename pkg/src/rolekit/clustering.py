"""k-means++ clustering of factor rows with angle-based validation.

Rows of a similarity factor belonging to one role are near-collinear and
rows of different roles point away from each other, so a clustering is
accepted only when every member stays close to its centroid (inner product
>= 0.9 after unit normalization) and distinct centroids stay apart
(inner product <= 0.7). Restarts with fresh k-means++ seeds run until a
clustering passes or the restart budget is exhausted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import RolePartition

__all__ = [
    "ClusterModel",
    "ClusterValidation",
    "DegenerateDataError",
    "WITHIN_THRESHOLD",
    "BETWEEN_THRESHOLD",
    "normalize_rows",
    "kmeans_pp_init",
    "kmeans",
    "validate",
    "cluster_validated",
]

WITHIN_THRESHOLD = 0.9
BETWEEN_THRESHOLD = 0.7
DEFAULT_MAX_RESTARTS = 50
DEFAULT_MAX_ITER = 300


class DegenerateDataError(ValueError):
    """Too few distinct rows to place the requested number of centroids."""


@dataclass(frozen=True)
class ClusterModel:
    """A fitted k-means model; centroids are means of their members and no
    returned cluster is empty."""

    centroids: np.ndarray
    labels: RolePartition
    objective: float
    iterations: int
    restarts_used: int = 1


@dataclass(frozen=True)
class ClusterValidation:
    """Angle diagnostics of a clustering on unit-normalized rows."""

    min_within: float
    max_between: float
    passed: bool

    def to_dict(self) -> dict:
        return {"min_within": self.min_within, "max_between": self.max_between,
                "passed": self.passed}


def normalize_rows(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each nonzero row to unit Euclidean norm.

    Zero rows are left zero; their indices are returned alongside.
    """
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(x, axis=1)
    zero_rows = np.nonzero(norms == 0)[0]
    safe = np.where(norms > 0, norms, 1.0)
    return x / safe[:, None], zero_rows


def _uniform_index(rng: np.random.Generator, n: int) -> int:
    # Uniform index through a raw uniform double; Generator.integers is
    # avoided to keep streams reproducible across numpy versions.
    return min(int(rng.random() * n), n - 1)


def kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator,
                   allow_duplicates: bool = False) -> np.ndarray:
    """Choose k rows of ``x`` as initial centroids by D^2 sampling.

    The first centroid is uniform; each further one is a row drawn with
    probability proportional to its squared distance to the nearest
    centroid already chosen, which never picks an exact duplicate. When
    fewer than k distinct rows exist the draw is impossible and a
    :class:`DegenerateDataError` is raised, unless ``allow_duplicates``
    lets the remaining picks fall back to uniform sampling.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise DegenerateDataError(f"need 1 <= k <= {n} rows, got k={k}")
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = _uniform_index(rng, n)
    d2 = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    for t in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            if not allow_duplicates:
                raise DegenerateDataError(
                    f"fewer than {k} distinct rows to seed centroids")
            idx = _uniform_index(rng, n)
        else:
            u = rng.random() * total
            idx = min(int(np.searchsorted(np.cumsum(d2), u, side="right")),
                      n - 1)
        chosen[t] = idx
        d2 = np.minimum(d2, np.maximum(np.sum((x - x[idx]) ** 2, axis=1), 0.0))
    return x[chosen].copy()


def _squared_distances(x: np.ndarray, centroids: np.ndarray,
                       x_sq: np.ndarray) -> np.ndarray:
    c_sq = np.sum(centroids ** 2, axis=1)
    d2 = x_sq[:, None] + c_sq[None, :] - 2.0 * (x @ centroids.T)
    return np.maximum(d2, 0.0)


def _relocate_empty(labels: np.ndarray, counts: np.ndarray,
                    assigned_d2: np.ndarray) -> None:
    # An empty cluster takes over the point currently farthest from its
    # centroid (ties broken by row order), skipping points whose departure
    # would empty the donor. With k <= n a donor always exists.
    order = np.argsort(-assigned_d2, kind="stable")
    pos = 0
    for empty in np.nonzero(counts == 0)[0]:
        while pos < len(order):
            i = order[pos]
            pos += 1
            if counts[labels[i]] > 1:
                counts[labels[i]] -= 1
                labels[i] = empty
                counts[empty] = 1
                break


def kmeans(x: np.ndarray, k: int, init: np.ndarray,
           max_iter: int = DEFAULT_MAX_ITER) -> ClusterModel:
    """Lloyd iterations from the given initial centroids.

    Points go to the nearest centroid (lowest index on ties), empty
    clusters are repaired by relocation, and centroids are recomputed as
    member means until the labels are stable or ``max_iter`` is reached.
    The objective never increases across iterations.
    """
    x = np.asarray(x, dtype=float)
    init = np.asarray(init, dtype=float)
    if init.shape != (k, x.shape[1]):
        raise ValueError(f"init must have shape ({k}, {x.shape[1]})")
    if k > x.shape[0]:
        raise DegenerateDataError(f"k={k} exceeds {x.shape[0]} rows")
    x_sq = np.sum(x ** 2, axis=1)
    centroids = init.copy()
    labels = np.full(x.shape[0], -1, dtype=np.int64)
    prev_objective = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        d2 = _squared_distances(x, centroids, x_sq)
        new_labels = np.argmin(d2, axis=1)
        counts = np.bincount(new_labels, minlength=k)
        if (counts == 0).any():
            _relocate_empty(new_labels, counts,
                            d2[np.arange(x.shape[0]), new_labels])
        for j in range(k):
            members = new_labels == j
            centroids[j] = x[members].mean(axis=0)
        diffs = x - centroids[new_labels]
        objective = float(np.einsum("ij,ij->", diffs, diffs))
        assert objective <= prev_objective + 1e-9, \
            f"objective increased: {prev_objective} -> {objective}"
        stable = bool(np.array_equal(new_labels, labels))
        labels = new_labels
        prev_objective = objective
        if stable:
            break
    return ClusterModel(centroids=centroids,
                        labels=RolePartition(labels=labels, k=k),
                        objective=prev_objective, iterations=iterations)


def validate(model: ClusterModel, x_normalized: np.ndarray,
             within_threshold: float = WITHIN_THRESHOLD,
             between_threshold: float = BETWEEN_THRESHOLD) -> ClusterValidation:
    """Angle check of a clustering against the unit-normalized rows.

    ``min_within`` is the smallest inner product of a row with its own
    unit-normalized centroid; ``max_between`` the largest inner product
    among distinct unit-normalized centroids (0 for a single cluster).
    """
    cn, _ = normalize_rows(model.centroids)
    labels = model.labels.labels
    row_dots = np.einsum("ij,ij->i", x_normalized, cn[labels])
    min_within = float(row_dots.min()) if len(row_dots) else 1.0
    if model.labels.k >= 2:
        gram = cn @ cn.T
        off_diag = gram[~np.eye(model.labels.k, dtype=bool)]
        max_between = float(off_diag.max())
    else:
        max_between = 0.0
    passed = min_within >= within_threshold and max_between <= between_threshold
    return ClusterValidation(min_within=min_within, max_between=max_between,
                             passed=passed)


def cluster_validated(x: np.ndarray, k: int, rng: np.random.Generator,
                      max_restarts: int = DEFAULT_MAX_RESTARTS,
                      within_threshold: float = WITHIN_THRESHOLD,
                      between_threshold: float = BETWEEN_THRESHOLD,
                      max_iter: int = DEFAULT_MAX_ITER,
                      normalize: bool = True,
                      require_between: bool = True,
                      ) -> tuple[ClusterModel, ClusterValidation]:
    """k-means restarted with fresh k-means++ seeds until validation passes.

    Returns the first passing model, or after ``max_restarts`` failures the
    best-objective model seen with ``passed=False``. Rows are clustered
    unit-normalized unless ``normalize=False``. ``require_between=False``
    restricts validation to the co-linearity condition (used when
    over-clustering on purpose). Each restart draws from its own child
    stream of ``rng``, so serial and parallel execution agree.

    A restart whose k-means++ draw degenerates (fewer than k distinct
    rows) falls back to duplicate seeding; the resulting collinear
    centroids then fail the between-cluster check, reporting over-split
    data as a failed validation rather than an error.
    """
    xw = normalize_rows(x)[0] if normalize else np.asarray(x, dtype=float)
    streams = rng.spawn(2 * max_restarts)
    best: tuple[ClusterModel, ClusterValidation] | None = None
    for t in range(max_restarts):
        try:
            init = kmeans_pp_init(xw, k, streams[2 * t])
        except DegenerateDataError:
            if k > xw.shape[0]:
                raise
            init = kmeans_pp_init(xw, k, streams[2 * t + 1],
                                  allow_duplicates=True)
        model = kmeans(xw, k, init, max_iter=max_iter)
        model = ClusterModel(centroids=model.centroids, labels=model.labels,
                             objective=model.objective,
                             iterations=model.iterations, restarts_used=t + 1)
        val = validate(model, xw, within_threshold, between_threshold)
        if not require_between:
            val = ClusterValidation(min_within=val.min_within,
                                    max_between=val.max_between,
                                    passed=val.min_within >= within_threshold)
        if val.passed:
            return model, val
        if best is None or model.objective < best[0].objective:
            best = (model, val)
    assert best is not None
    model, val = best
    model = ClusterModel(centroids=model.centroids, labels=model.labels,
                         objective=model.objective, iterations=model.iterations,
                         restarts_used=max_restarts)
    return model, val
