"""Sparse directed graphs: construction, IO, planted-partition generation,
permutation and reduced-graph (block density) extraction.

All randomness is drawn from ``numpy.random.Generator`` backed by the PCG64
bit generator, and only through uniform doubles, so a given seed reproduces
the same graph on every platform.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "DirectedGraph",
    "RolePartition",
    "BenchmarkSpec",
    "ReducedGraph",
    "EdgeListParseError",
    "load_edge_list",
    "save_edge_list",
    "load_partition",
    "save_partition",
    "degrees",
    "generate_planted",
    "permute",
    "extract_reduced",
]


class EdgeListParseError(ValueError):
    """Malformed edge-list input; carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class DirectedGraph:
    """Immutable binary directed graph with O(deg) child and parent access.

    ``adj`` stores the adjacency in CSR form (rows enumerate children),
    ``adj_t`` its transpose, also CSR (rows enumerate parents). Entries are
    1.0, duplicates are collapsed at construction; self-loops are allowed.
    """

    n: int
    adj: sp.csr_matrix
    adj_t: sp.csr_matrix

    @classmethod
    def from_edges(cls, n: int, edges) -> "DirectedGraph":
        edges = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                           dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        data = np.ones(len(edges))
        a = sp.coo_matrix((data, (edges[:, 0], edges[:, 1])), shape=(n, n)).tocsr()
        a.data[:] = 1.0  # collapse duplicates
        a.sum_duplicates()
        a.data[:] = 1.0
        return cls(n=n, adj=a, adj_t=a.T.tocsr())

    @property
    def num_edges(self) -> int:
        return int(self.adj.nnz)

    def children(self, i: int) -> np.ndarray:
        return self.adj.indices[self.adj.indptr[i]:self.adj.indptr[i + 1]]

    def parents(self, j: int) -> np.ndarray:
        return self.adj_t.indices[self.adj_t.indptr[j]:self.adj_t.indptr[j + 1]]

    def edge_array(self) -> np.ndarray:
        """All edges as an (m, 2) array in row-major (CSR) order."""
        coo = self.adj.tocoo()
        return np.column_stack([coo.row, coo.col]).astype(np.int64)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edge_array()}


@dataclass(frozen=True)
class RolePartition:
    """Assignment of each node to one of ``k`` clusters, labels in 0..k-1."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError("labels out of range for k")

    @classmethod
    def from_labels(cls, labels) -> "RolePartition":
        """Build a partition, compacting labels to a dense 0..k-1 range."""
        labels = np.asarray(labels, dtype=np.int64)
        _, dense = np.unique(labels, return_inverse=True)
        k = int(dense.max()) + 1 if dense.size else 0
        return cls(labels=dense, k=k)

    def __len__(self) -> int:
        return len(self.labels)

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)


@dataclass(frozen=True)
class BenchmarkSpec:
    """Planted-partition benchmark: reduced adjacency ``B``, per-role sizes,
    and in/out edge probabilities."""

    B: np.ndarray
    sizes: np.ndarray
    p_in: float
    p_out: float
    seed: int

    def __post_init__(self):
        B = np.asarray(self.B, dtype=np.int64)
        sizes = np.asarray(self.sizes, dtype=np.int64)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "sizes", sizes)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError("B must be square")
        if len(sizes) != B.shape[0]:
            raise ValueError("sizes length must match B")
        if sizes.size and sizes.min() <= 0:
            raise ValueError("sizes must be positive")
        if not (0.0 <= self.p_in <= 1.0 and 0.0 <= self.p_out <= 1.0):
            raise ValueError("p_in and p_out must lie in [0, 1]")

    @property
    def n(self) -> int:
        return int(self.sizes.sum())

    @classmethod
    def from_json(cls, text: str) -> "BenchmarkSpec":
        d = json.loads(text)
        return cls(B=np.asarray(d["B"]), sizes=np.asarray(d["sizes"]),
                   p_in=float(d["p_in"]), p_out=float(d["p_out"]),
                   seed=int(d["seed"]))


@dataclass(frozen=True)
class ReducedGraph:
    """Role-level graph: per-block edge densities and thresholded adjacency."""

    k: int
    threshold: float
    density: np.ndarray
    edges: np.ndarray

    def to_json(self) -> str:
        return json.dumps({
            "k": self.k,
            "threshold": self.threshold,
            "density": self.density.tolist(),
            "edges": self.edges.astype(int).tolist(),
        }, indent=2)


# ---------------------------------------------------------------------------
# Edge-list and partition file IO
# ---------------------------------------------------------------------------

def load_edge_list(reader, one_indexed: bool = False,
                   ignore_weights: bool = True,
                   n: int | None = None) -> DirectedGraph:
    """Parse a whitespace-separated edge list into a graph.

    Lines are ``src dst`` with an optional third weight column (discarded
    when ``ignore_weights``, rejected otherwise). Blank lines and lines
    starting with ``#`` or ``%`` are skipped. Node count defaults to
    1 + max node id after index normalization; pass ``n`` to override.
    """
    if isinstance(reader, (str, bytes)):
        reader = io.StringIO(reader.decode() if isinstance(reader, bytes) else reader)
    shift = 1 if one_indexed else 0
    src, dst = [], []
    for line_no, raw in enumerate(reader, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode()
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        parts = line.split()
        if len(parts) == 3 and not ignore_weights:
            raise EdgeListParseError(line_no, "unexpected weight column")
        if len(parts) not in (2, 3):
            raise EdgeListParseError(line_no, f"expected 2 or 3 fields, got {len(parts)}")
        try:
            i, j = int(parts[0]) - shift, int(parts[1]) - shift
        except ValueError:
            raise EdgeListParseError(line_no, f"non-integer node id in {parts[:2]}") from None
        if i < 0 or j < 0:
            raise EdgeListParseError(line_no, f"negative node id ({i}, {j})")
        src.append(i)
        dst.append(j)
    inferred = 1 + max(max(src, default=-1), max(dst, default=-1))
    if n is None:
        n = inferred
    elif n < inferred:
        raise ValueError(f"explicit n={n} smaller than max node id {inferred - 1}")
    return DirectedGraph.from_edges(n, np.column_stack([src, dst]) if src
                                    else np.empty((0, 2), dtype=np.int64))


def save_edge_list(g: DirectedGraph, writer) -> None:
    writer.write(f"# n={g.n}\n")
    for i, j in g.edge_array():
        writer.write(f"{i} {j}\n")


def load_partition(reader) -> RolePartition:
    """Read a ``node,cluster`` CSV (header required, one row per node)."""
    if isinstance(reader, str):
        reader = io.StringIO(reader)
    header = reader.readline().strip()
    if header.replace(" ", "") != "node,cluster":
        raise ValueError(f"expected 'node,cluster' header, got {header!r}")
    rows = []
    for line in reader:
        line = line.strip()
        if not line:
            continue
        node_s, cluster_s = line.split(",")
        rows.append((int(node_s), int(cluster_s)))
    rows.sort()
    nodes = [r[0] for r in rows]
    if nodes != list(range(len(rows))):
        raise ValueError("partition file must cover nodes 0..n-1 exactly once")
    return RolePartition.from_labels([r[1] for r in rows])


def save_partition(p: RolePartition, writer) -> None:
    writer.write("node,cluster\n")
    for node, cluster in enumerate(p.labels):
        writer.write(f"{node},{cluster}\n")


# ---------------------------------------------------------------------------
# Degree computations
# ---------------------------------------------------------------------------

def degrees(g: DirectedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Out-degree (children counts) and in-degree (parent counts) vectors."""
    k_out = np.diff(g.adj.indptr).astype(np.int64)
    k_in = np.diff(g.adj_t.indptr).astype(np.int64)
    return k_out, k_in


# ---------------------------------------------------------------------------
# Planted-partition generator
# ---------------------------------------------------------------------------

def generate_planted(spec: BenchmarkSpec) -> tuple[DirectedGraph, RolePartition]:
    """Sample a random graph around the role structure of ``spec.B``.

    Every ordered node pair (i, j), including i = j, receives an edge with
    probability ``p_in`` when B[R(i), R(j)] = 1 and ``p_out`` otherwise.
    Deterministic in ``spec.seed`` (PCG64; block pairs visited row-major).
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    k_b = spec.B.shape[0]
    offsets = np.concatenate([[0], np.cumsum(spec.sizes)])
    labels = np.repeat(np.arange(k_b), spec.sizes)

    rows, cols = [], []
    for a in range(k_b):
        for b in range(k_b):
            p = spec.p_in if spec.B[a, b] else spec.p_out
            u = rng.random((int(spec.sizes[a]), int(spec.sizes[b])))
            hit_i, hit_j = np.nonzero(u < p)
            if hit_i.size:
                rows.append(hit_i + offsets[a])
                cols.append(hit_j + offsets[b])
    if rows:
        edges = np.column_stack([np.concatenate(rows), np.concatenate(cols)])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    graph = DirectedGraph.from_edges(int(spec.n), edges)
    return graph, RolePartition(labels=labels, k=k_b)


# ---------------------------------------------------------------------------
# Permutation and reduced-graph extraction
# ---------------------------------------------------------------------------

def permute(g: DirectedGraph, p: RolePartition) -> DirectedGraph:
    """Reorder nodes so cluster labels are non-decreasing (stable within
    a label); the edge set is relabelled accordingly."""
    if len(p.labels) != g.n:
        raise ValueError(f"partition length {len(p.labels)} != node count {g.n}")
    order = np.argsort(p.labels, kind="stable")
    new_index = np.empty(g.n, dtype=np.int64)
    new_index[order] = np.arange(g.n)
    edges = g.edge_array()
    return DirectedGraph.from_edges(g.n, np.column_stack([new_index[edges[:, 0]],
                                                          new_index[edges[:, 1]]])
                                    if edges.size else edges)


def extract_reduced(g: DirectedGraph, p: RolePartition,
                    threshold: float = 0.1) -> ReducedGraph:
    """Block edge densities and the thresholded role-level adjacency.

    density(a, b) = (# edges from cluster a to cluster b) / (|a| * |b|);
    diagonal blocks use |a|^2 (self-loops counted). An edge is set where
    density strictly exceeds ``threshold``.
    """
    if len(p.labels) != g.n:
        raise ValueError("partition length mismatch")
    if not (0.0 <= threshold <= 1.0):
        raise ValueError("threshold must lie in [0, 1]")
    sizes = p.cluster_sizes()
    if (sizes == 0).any():
        raise ValueError(f"empty cluster(s): {np.nonzero(sizes == 0)[0].tolist()}")
    counts = np.zeros((p.k, p.k), dtype=np.int64)
    edges = g.edge_array()
    if edges.size:
        np.add.at(counts, (p.labels[edges[:, 0]], p.labels[edges[:, 1]]), 1)
    denom = np.outer(sizes, sizes).astype(float)
    density = counts / denom
    return ReducedGraph(k=p.k, threshold=float(threshold), density=density,
                        edges=(density > threshold))
