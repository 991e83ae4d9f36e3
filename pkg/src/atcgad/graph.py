"""Graph representation, file ingestion, and synthetic benchmarks.

The central type is :class:`Graph`: an immutable undirected graph with
per-node feature vectors and optional binary anomaly labels. Neighbor
lists are stored CSR-style (``indptr`` / ``indices``) because every
downstream pass iterates neighborhoods. Self-loops are never stored;
the encoder adds them virtually when it normalizes propagation.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyGraphError, GraphFormatError, GraphParseError, GraphShapeError
from .rng import STREAM_GRAPH, STREAM_INJECT, philox


class GraphLoadWarning(UserWarning):
    """Raised once per load when input lines were dropped.

    The number of dropped self-loop lines is available as ``count``.
    """

    def __init__(self, message: str, count: int):
        super().__init__(message)
        self.count = count


def _canonical_edges(num_nodes: int, edges: np.ndarray) -> np.ndarray:
    """Canonicalize an undirected edge list: u < v, deduplicated, sorted."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size == 0:
        return edges.reshape(0, 2)
    if edges.min() < 0 or edges.max() >= num_nodes:
        bad = edges[(edges < 0).any(axis=1) | (edges >= num_nodes).any(axis=1)][0]
        raise GraphFormatError(
            f"edge endpoint out of range: ({bad[0]}, {bad[1]}) with {num_nodes} nodes"
        )
    if (edges[:, 0] == edges[:, 1]).any():
        bad = edges[edges[:, 0] == edges[:, 1]][0]
        raise GraphFormatError(f"self-loop not allowed: ({bad[0]}, {bad[1]})")
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    keys = lo * num_nodes + hi
    keys = np.unique(keys)
    return np.column_stack([keys // num_nodes, keys % num_nodes])


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph with node features.

    ``edges`` holds one row per undirected edge with endpoints ordered
    ``u < v``; duplicates passed to the constructor are collapsed.
    Construction is single-threaded; once built the object is safe for
    concurrent reads.
    """

    num_nodes: int
    edges: np.ndarray
    features: np.ndarray
    labels: Optional[np.ndarray] = None
    node_ids: Optional[Sequence[str]] = None
    indptr: np.ndarray = field(init=False, repr=False)
    indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.num_nodes)
        if n <= 0:
            raise EmptyGraphError("graph must have at least one node")
        edges = _canonical_edges(n, self.edges)
        features = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        if features.ndim != 2 or features.shape[0] != n:
            raise GraphShapeError(
                f"feature matrix has {features.shape[0] if features.ndim == 2 else '?'} rows, expected {n}"
            )
        if features.shape[1] < 1:
            raise GraphShapeError("feature dimension must be >= 1")
        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (n,):
                raise GraphShapeError(f"label count {labels.shape} does not match {n} nodes")
            if not np.isin(labels, (0, 1)).all():
                raise GraphParseError("labels must be 0 or 1")
        if self.node_ids is not None and len(self.node_ids) != n:
            raise GraphShapeError("node_ids length does not match node count")

        # CSR over both edge directions, neighbor lists sorted per row.
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((cols, rows))
        indices = np.ascontiguousarray(cols[order])
        counts = np.bincount(rows, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])

        for arr in (edges, features, labels, indptr, indices):
            if arr is not None:
                arr.setflags(write=False)
        object.__setattr__(self, "num_nodes", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "_csr_order", order)

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.diff(self.indptr)
        d.setflags(write=False)
        return d

    def neighbors(self, i: int) -> np.ndarray:
        """Sorted neighbor ids of node i (view, do not mutate)."""
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        nbrs = self.neighbors(i)
        k = np.searchsorted(nbrs, j)
        return k < nbrs.size and nbrs[k] == j

    @cached_property
    def csr_edge_ids(self) -> np.ndarray:
        """Undirected edge id of each CSR slot.

        Slot t of ``indices`` corresponds to a directed pair (row, col);
        this maps it back to the row of ``edges`` carrying that pair, so
        per-edge quantities (e.g. trust values) can be scattered into
        CSR order without a hash lookup.
        """
        m = self.num_edges
        eid = np.concatenate([np.arange(m, dtype=np.int64)] * 2) if m else np.zeros(0, np.int64)
        out = eid[self._csr_order] if m else eid
        out.setflags(write=False)
        return out

    @cached_property
    def csr_rows(self) -> np.ndarray:
        """Row (source node) of each CSR slot."""
        r = np.repeat(np.arange(self.num_nodes, dtype=np.int64), np.diff(self.indptr))
        r.setflags(write=False)
        return r

    def adjacency(self) -> sp.csr_matrix:
        """Binary adjacency as a scipy CSR matrix (no self-loops)."""
        return sp.csr_matrix(
            (np.ones(self.indices.size), self.indices, self.indptr),
            shape=(self.num_nodes, self.num_nodes),
        )

    def with_labels(self, labels: np.ndarray) -> "Graph":
        return Graph(self.num_nodes, self.edges, self.features, labels, self.node_ids)


@dataclass(frozen=True)
class AnomalyPlan:
    """Recipe for planting synthetic anomalies into a clean graph.

    Contextual anomalies get their features resampled from a Gaussian
    centered ``contextual_shift`` away from the original features (in a
    random direction) with standard deviation ``contextual_scale``; for
    generators with unit within-cluster variance the shift is measured
    in within-cluster standard deviations. Structural anomalies are
    wired into a clique among themselves (existing edges kept). The two
    planted sets are disjoint.
    """

    contextual_fraction: float = 0.0
    structural_fraction: float = 0.0
    seed: int = 0
    contextual_shift: float = 5.0
    contextual_scale: float = 2.0

    def __post_init__(self):
        for name in ("contextual_fraction", "structural_fraction"):
            f = getattr(self, name)
            if not (0.0 <= f < 0.5):
                raise ValueError(f"{name} must be in [0, 0.5), got {f}")

    def count(self, fraction: float, n: int) -> int:
        # max(1, floor(f*N)) when f > 0 keeps tiny fixtures deterministic
        return max(1, int(np.floor(fraction * n))) if fraction > 0 else 0


def load_graph(edge_path, feature_path, label_path=None) -> Graph:
    """Load a graph from whitespace edge pairs plus a headerless CSV.

    Edge file: one "i j" 0-indexed integer pair per line, lines starting
    with '#' ignored. Self-loop lines are dropped; one GraphLoadWarning
    carrying the drop count is emitted if any were seen. Duplicate edges
    are collapsed. Feature file: headerless CSV of floats, row i is node
    i and defines the node count. Label file, if given, holds one 0/1
    per line.
    """
    try:
        features = np.loadtxt(feature_path, delimiter=",", dtype=np.float64, ndmin=2, comments="#")
    except FileNotFoundError:
        raise
    except ValueError as exc:
        raise GraphParseError(f"feature file {feature_path}: {exc}") from exc
    if features.size == 0:
        raise GraphShapeError(f"feature file {feature_path} is empty")
    n = features.shape[0]

    pairs = []
    dropped_self_loops = 0
    with open(edge_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise GraphFormatError(f"{edge_path}:{lineno}: expected 'i j', got {line!r}")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError as exc:
                raise GraphFormatError(f"{edge_path}:{lineno}: non-integer endpoint in {line!r}") from exc
            if u == v:
                dropped_self_loops += 1
                continue
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"{edge_path}:{lineno}: endpoint out of range for {n} nodes")
            pairs.append((u, v))
    if dropped_self_loops:
        warnings.warn(
            GraphLoadWarning(f"dropped {dropped_self_loops} self-loop line(s)", dropped_self_loops)
        )

    labels = None
    if label_path is not None:
        raw = []
        with open(label_path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    raw.append(int(line))
                except ValueError as exc:
                    raise GraphParseError(f"{label_path}:{lineno}: non-integer label {line!r}") from exc
        if len(raw) != n:
            raise GraphShapeError(f"label file has {len(raw)} rows, feature file has {n}")
        labels = np.asarray(raw, dtype=np.int64)
        if not np.isin(labels, (0, 1)).all():
            raise GraphParseError(f"{label_path}: labels must be 0 or 1")

    edges = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return Graph(n, edges, features, labels)


def _sample_distinct(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """Uniform m-subset of range(n), as the first m distinct draws of an
    iid uniform stream (uniform over subsets by exchangeability)."""
    if m >= n:
        return np.arange(n, dtype=np.int64)
    chosen = np.unique(rng.integers(0, n, size=m, dtype=np.int64))
    while chosen.size < m:
        extra = rng.integers(0, n, size=m - chosen.size, dtype=np.int64)
        chosen = np.unique(np.concatenate([chosen, extra]))
    return chosen


def _unrank_triangular(t: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map pair ranks t in [0, C(n,2)) to (i, j), i < j, lexicographic."""
    i_vals = np.arange(n - 1, dtype=np.int64)
    # rank of pair (i, i+1), the first pair in row i
    row_start = i_vals * (n - 1) - (i_vals * (i_vals - 1)) // 2
    i = np.searchsorted(row_start, t, side="right") - 1
    j = t - row_start[i] + i + 1
    return i, j


BLOCK_MEAN_SCALE = 3.0  # stddev of per-block feature means; within-block stddev is 1


def generate_sbm(
    n_per_block: int,
    n_blocks: int,
    p_in: float,
    p_out: float,
    feature_dim: int,
    seed: int,
) -> Graph:
    """Stochastic block model with Gaussian block features.

    Edges are sampled exactly: for each block pair the edge count is a
    binomial draw and the edges a uniform subset of the candidate pairs,
    so the sampler stays O(edges) even for very sparse large graphs.
    Features for block b are N(mu_b, I) with mu_b drawn from
    N(0, BLOCK_MEAN_SCALE^2 I). Labels are all zero. Deterministic per
    seed (Philox stream, see rng module).
    """
    if n_per_block * n_blocks == 0:
        raise EmptyGraphError("n_per_block * n_blocks must be positive")
    if not 0.0 <= p_out < p_in <= 1.0:
        raise ValueError(f"need 0 <= p_out < p_in <= 1, got p_in={p_in}, p_out={p_out}")
    if feature_dim < 2:
        raise ValueError("feature_dim must be >= 2")

    rng = philox(seed, STREAM_GRAPH)
    n = n_per_block * n_blocks
    chunks = []
    for a in range(n_blocks):
        base_a = a * n_per_block
        for b in range(a, n_blocks):
            base_b = b * n_per_block
            if a == b:
                n_pairs = n_per_block * (n_per_block - 1) // 2
                p = p_in
            else:
                n_pairs = n_per_block * n_per_block
                p = p_out
            if n_pairs == 0 or p == 0.0:
                continue
            m = int(rng.binomial(n_pairs, p))
            if m == 0:
                continue
            t = _sample_distinct(rng, n_pairs, m)
            if a == b:
                i, j = _unrank_triangular(t, n_per_block)
                chunks.append(np.column_stack([base_a + i, base_a + j]))
            else:
                chunks.append(np.column_stack([base_a + t // n_per_block, base_b + t % n_per_block]))
    edges = np.concatenate(chunks) if chunks else np.zeros((0, 2), dtype=np.int64)

    block_means = rng.normal(0.0, BLOCK_MEAN_SCALE, size=(n_blocks, feature_dim))
    features = rng.standard_normal((n, feature_dim))
    features += np.repeat(block_means, n_per_block, axis=0)
    labels = np.zeros(n, dtype=np.int64)
    return Graph(n, edges, features, labels)


def inject_anomalies(g: Graph, plan: AnomalyPlan) -> Graph:
    """Plant contextual and structural anomalies; returns a new Graph.

    Requires a clean input (no labels, or labels all zero). Node count
    and feature dimension are preserved. Deterministic per plan seed.
    """
    if g.labels is not None and g.labels.any():
        raise ValueError("input graph already carries anomaly labels")

    n = g.num_nodes
    n_ctx = plan.count(plan.contextual_fraction, n)
    n_str = plan.count(plan.structural_fraction, n)
    labels = np.zeros(n, dtype=np.int64)
    if n_ctx + n_str == 0:
        warnings.warn("anomaly plan plants zero anomalies", UserWarning)
        return Graph(n, g.edges, g.features, labels, g.node_ids)
    if n_ctx + n_str > n:
        raise ValueError(f"plan wants {n_ctx + n_str} anomalies but graph has {n} nodes")

    rng = philox(plan.seed, STREAM_INJECT)
    perm = rng.permutation(n)
    contextual = np.sort(perm[:n_ctx])
    structural = np.sort(perm[n_ctx : n_ctx + n_str])
    labels[contextual] = 1
    labels[structural] = 1

    features = g.features.copy()
    for i in contextual:
        direction = rng.standard_normal(g.feature_dim)
        direction /= np.linalg.norm(direction)
        noise = rng.standard_normal(g.feature_dim)
        features[i] = g.features[i] + plan.contextual_shift * direction + plan.contextual_scale * noise

    edges = g.edges
    if n_str >= 2:
        clique = np.array(list(itertools.combinations(structural.tolist(), 2)), dtype=np.int64)
        edges = np.concatenate([edges, clique])

    return Graph(n, edges, features, labels, g.node_ids)
