"""Link graphs as row-stochastic transition matrices.

A :class:`TransitionModel` stores P in canonical CSR form (sorted column
indices, strictly positive stored entries). Rows without out-links are
replaced by the uniform row over all nodes at construction time.
"""
from __future__ import annotations

import bisect

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

GENERATORS = ("uniform-out-degree", "power-law-out-degree", "explicit-edge-list")

ROW_SUM_TOL = 1e-12


class GraphError(ValueError):
    """Invalid graph data or generator parameters."""


class EdgeListParseError(GraphError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """Row-stochastic matrix P over ``n_nodes`` nodes in CSR form.

    ``dangling`` marks rows that had no out-links and were repaired to the
    uniform distribution; those rows are not written back by
    :func:`save_edge_list`.
    """

    n_nodes: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    probs: np.ndarray
    dangling: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.n_nodes
        if n < 1:
            raise GraphError("a model needs at least one node")
        offs, cols, probs = self.row_offsets, self.col_indices, self.probs
        if offs.shape != (n + 1,) or offs[0] != 0 or offs[-1] != cols.shape[0]:
            raise GraphError("malformed row offsets")
        if cols.shape != probs.shape:
            raise GraphError("column and probability arrays differ in length")
        deg = np.diff(offs)
        if np.any(deg < 1):
            raise GraphError("every row needs at least one stored entry")
        if cols.size and (cols.min() < 0 or cols.max() >= n):
            raise GraphError("column index out of range")
        if not np.all(probs > 0):
            raise GraphError("stored probabilities must be strictly positive")
        # strictly increasing columns inside each row
        steps = np.diff(cols)
        row_starts = np.zeros(cols.shape[0], dtype=bool)
        row_starts[offs[:-1]] = True
        if np.any(steps[~row_starts[1:]] <= 0):
            raise GraphError("column indices must be strictly increasing within a row")
        sums = np.add.reduceat(probs, offs[:-1])
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            raise GraphError("rows must sum to 1")
        for arr in (offs, cols, probs, self.dangling):
            arr.setflags(write=False)

    @property
    def out_degrees(self) -> np.ndarray:
        return np.diff(self.row_offsets)

    @cached_property
    def row_of_entry(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_nodes), self.out_degrees)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.probs, self.col_indices, self.row_offsets),
                             shape=(self.n_nodes, self.n_nodes))

    @cached_property
    def csr_transpose(self) -> sp.csr_matrix:
        return self.csr.T.tocsr()

    def row(self, i: int) -> np.ndarray:
        """Dense copy of row ``i``."""
        out = np.zeros(self.n_nodes)
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        out[self.col_indices[lo:hi]] = self.probs[lo:hi]
        return out

    def prob(self, i: int, j: int) -> float:
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        k = lo + np.searchsorted(self.col_indices[lo:hi], j)
        if k < hi and self.col_indices[k] == j:
            return float(self.probs[k])
        return 0.0

    def transpose_matvec(self, z: np.ndarray) -> np.ndarray:
        """Return ``P^T z``."""
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.n_nodes,):
            raise ValueError(f"expected a vector of length {self.n_nodes}, got shape {z.shape}")
        return self.csr_transpose @ z

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def same_arrays(self, other: "TransitionModel") -> bool:
        return (self.n_nodes == other.n_nodes
                and np.array_equal(self.row_offsets, other.row_offsets)
                and np.array_equal(self.col_indices, other.col_indices)
                and np.array_equal(self.probs, other.probs))


@dataclass(frozen=True)
class GoogleMatrix:
    """Implicit ``c P + (1-c)/N * 1 1^T``; never densified."""

    base: TransitionModel
    c: float

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"damping c must lie in (0, 1), got {self.c}")

    @property
    def n_nodes(self) -> int:
        return self.base.n_nodes

    def left_multiply(self, pi: np.ndarray) -> np.ndarray:
        """Row vector times the Google matrix, returned as a 1-d array."""
        pi = np.asarray(pi, dtype=np.float64)
        return self.c * self.base.transpose_matvec(pi) + (1.0 - self.c) / self.n_nodes * pi.sum()

    def row_sums(self) -> np.ndarray:
        n = self.n_nodes
        base = np.add.reduceat(self.base.probs, self.base.row_offsets[:-1])
        return self.c * base + (1.0 - self.c) / n * n


def build_from_edges(n_nodes: int, edges: Iterable[Sequence[int]],
                     weights: Optional[Sequence[float]] = None) -> TransitionModel:
    """Row-normalize an edge list into a :class:`TransitionModel`.

    Unweighted rows split uniformly over their out-links. Nodes without
    out-links get the uniform row over all ``n_nodes`` nodes.

    >>> build_from_edges(2, [(0, 1), (1, 0)]).to_dense().tolist()
    [[0.0, 1.0], [1.0, 0.0]]
    """
    n_nodes = int(n_nodes)
    if n_nodes < 1:
        raise GraphError("n_nodes must be positive")
    if not isinstance(edges, np.ndarray):
        edges = list(edges)
    edge_arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    src, dst = edge_arr[:, 0], edge_arr[:, 1]
    if edge_arr.size and (edge_arr.min() < 0 or edge_arr.max() >= n_nodes):
        bad = int(np.flatnonzero((edge_arr < 0).any(1) | (edge_arr >= n_nodes).any(1))[0])
        raise GraphError(f"edge {tuple(edge_arr[bad])} has a node index outside [0, {n_nodes})")
    if weights is None:
        w = None
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (edge_arr.shape[0],):
            raise GraphError("need exactly one weight per edge")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise GraphError("edge weights must be finite and positive")

    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    if src.size > 1:
        dup = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
        if dup.any():
            k = int(np.flatnonzero(dup)[0])
            raise GraphError(f"duplicate edge ({src[k]}, {dst[k]})")

    deg = np.bincount(src, minlength=n_nodes)
    dangling = deg == 0
    if w is None:
        probs = 1.0 / deg[src]
    else:
        w = w[order]
        totals = np.bincount(src, weights=w, minlength=n_nodes)
        probs = w / totals[src]

    # splice uniform rows in for the dangling nodes
    full_deg = np.where(dangling, n_nodes, deg)
    row_offsets = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(full_deg, out=row_offsets[1:])
    col_indices = np.empty(row_offsets[-1], dtype=np.int64)
    all_probs = np.empty(row_offsets[-1], dtype=np.float64)
    edge_offsets = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(deg, out=edge_offsets[1:])
    everything = np.arange(n_nodes, dtype=np.int64)
    for i in range(n_nodes):
        lo, hi = row_offsets[i], row_offsets[i + 1]
        if dangling[i]:
            col_indices[lo:hi] = everything
            all_probs[lo:hi] = 1.0 / n_nodes
        else:
            elo, ehi = edge_offsets[i], edge_offsets[i + 1]
            col_indices[lo:hi] = dst[elo:ehi]
            all_probs[lo:hi] = probs[elo:ehi]
    return TransitionModel(n_nodes, row_offsets, col_indices, all_probs, dangling)


@dataclass(frozen=True)
class GraphSpec:
    """Recipe for a synthetic (or file-backed) graph.

    Out-degrees are drawn uniformly from ``[min_degree, max_degree]`` or from
    a discrete power law ``P(d) ~ d**-exponent`` on ``[1, max_degree]``.
    Link targets are distinct non-self nodes chosen with popularity weights
    ``rank**-target_skew`` over a random ranking of the nodes; ``target_skew=0``
    picks targets uniformly. Larger skews concentrate in-links and widen the
    spread of PageRank values.
    """

    n_nodes: int
    generator: str = "uniform-out-degree"
    min_degree: int = 1
    max_degree: Optional[int] = None
    exponent: float = 2.1
    target_skew: float = 0.0
    seed: int = 0
    path: Optional[str] = None

    def validate(self) -> None:
        if self.generator not in GENERATORS:
            raise GraphError(f"unknown generator {self.generator!r}; choose from {GENERATORS}")
        if self.generator == "explicit-edge-list":
            if not self.path:
                raise GraphError("explicit-edge-list needs a path")
            return
        n = self.n_nodes
        if n < 1:
            raise GraphError("n_nodes must be positive")
        dmax = self.resolved_max_degree
        if self.generator == "uniform-out-degree":
            if not 0 <= self.min_degree <= dmax <= max(n - 1, 0):
                raise GraphError(f"need 0 <= min_degree <= max_degree <= N-1 = {n - 1}")
        else:
            if not self.exponent > 1:
                raise GraphError("power-law exponent must exceed 1")
            if not 1 <= dmax <= n - 1:
                raise GraphError(f"power-law degrees need 1 <= max_degree <= N-1 = {n - 1}")
        if self.target_skew < 0:
            raise GraphError("target_skew must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise GraphError("seed must be an unsigned 64-bit integer")

    @property
    def resolved_max_degree(self) -> int:
        if self.max_degree is not None:
            return int(self.max_degree)
        if self.generator == "uniform-out-degree":
            return max(self.min_degree, 0)
        return max(self.n_nodes - 1, 0)


def _draw_degrees(spec: GraphSpec, rng: np.random.Generator) -> np.ndarray:
    n, dmax = spec.n_nodes, spec.resolved_max_degree
    if spec.generator == "uniform-out-degree":
        return rng.integers(spec.min_degree, dmax + 1, size=n)
    support = np.arange(1, dmax + 1)
    pmf = support ** -float(spec.exponent)
    return rng.choice(support, size=n, p=pmf / pmf.sum())


def generate(spec: GraphSpec) -> TransitionModel:
    """Build the model described by ``spec``; a pure function of the spec."""
    spec.validate()
    if spec.generator == "explicit-edge-list":
        return load_edge_list(spec.path)
    n = spec.n_nodes
    rng = np.random.default_rng(spec.seed)
    degrees = _draw_degrees(spec, rng)
    popularity = np.empty(n)
    popularity[rng.permutation(n)] = np.arange(1, n + 1, dtype=np.float64) ** -float(spec.target_skew)
    return build_from_edges(n, _draw_targets(degrees, popularity, rng))


def _draw_targets(degrees: np.ndarray, popularity: np.ndarray, rng: np.random.Generator,
                  rounds: int = 64) -> np.ndarray:
    """Edges ``(i, t)`` with ``degrees[i]`` distinct targets ``t != i`` per node.

    Targets are drawn with probability proportional to ``popularity``;
    self-loops and repeats are redrawn, which gives the law of weighted
    sampling without replacement. Nodes linking to more than N/16 targets
    use one exact weighted draw instead; nodes still short after ``rounds``
    passes finish by inverse-CDF draws that skip their used targets.
    """
    n = popularity.shape[0]
    cdf = np.cumsum(popularity)
    heavy = degrees > max(n // 16, 1)
    src = np.repeat(np.arange(n, dtype=np.int64), np.where(heavy, 0, degrees))
    keys = np.empty(0, dtype=np.int64)
    pending = src
    for _ in range(rounds):
        if pending.size == 0:
            break
        t = np.minimum(np.searchsorted(cdf, rng.random(pending.size) * cdf[-1], side="right"), n - 1)
        cand = pending * n + t
        _, first = np.unique(cand, return_index=True)
        fresh = np.zeros(pending.size, dtype=bool)
        fresh[first] = True
        ok = fresh & (t != pending) & ~np.isin(cand, keys)
        keys = np.concatenate([keys, cand[ok]])
        pending = pending[~ok]
    extra = [keys]
    for i in np.flatnonzero(heavy):
        free = np.setdiff1d(np.arange(n), [i])
        w = popularity[free]
        extra.append(i * n + rng.choice(free, size=int(degrees[i]), replace=False, p=w / w.sum()))
    if pending.size:
        srt = np.sort(keys)
        for i, short in zip(*(v.tolist() for v in np.unique(pending, return_counts=True))):
            lo, hi = np.searchsorted(srt, [i * n, (i + 1) * n])
            holes = sorted(set((srt[lo:hi] % n).tolist()) | {i})
            for _ in range(short):
                t = _draw_skipping(cdf, popularity, holes, rng.random())
                bisect.insort(holes, t)
                extra.append(np.array([i * n + t]))
    keys = np.sort(np.concatenate(extra))
    return np.stack([keys // n, keys % n], axis=1)


def _draw_skipping(cdf: np.ndarray, popularity: np.ndarray, holes: list, u: float) -> int:
    """Inverse-CDF draw with the sorted ``holes`` removed from the support."""
    total = cdf[-1] - popularity[holes].sum()
    v = u * total
    x = int(np.searchsorted(cdf, v, side="right"))
    for h in holes:
        if h > x:
            break
        v += popularity[h]
        x = int(np.searchsorted(cdf, v, side="right"))
    x = min(x, cdf.shape[0] - 1)
    if x in holes:  # rounding at the top of the range
        x = max(k for k in range(cdf.shape[0]) if k not in holes)
    return x


def _parse_edge_list(lines, path):
    n_nodes = None
    edges, weights = [], []
    weighted = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if n_nodes is None:
            if len(parts) != 1:
                raise EdgeListParseError(path, lineno, "expected the node count on its own line")
            try:
                n_nodes = int(parts[0])
            except ValueError:
                raise EdgeListParseError(path, lineno, f"bad node count {parts[0]!r}") from None
            if n_nodes < 1:
                raise EdgeListParseError(path, lineno, "node count must be positive")
            continue
        if len(parts) not in (2, 3):
            raise EdgeListParseError(path, lineno, "expected 'source target [weight]'")
        try:
            s, t = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(path, lineno, "node indices must be integers") from None
        if not (0 <= s < n_nodes and 0 <= t < n_nodes):
            raise EdgeListParseError(path, lineno, f"node index out of range [0, {n_nodes})")
        has_w = len(parts) == 3
        if weighted is None:
            weighted = has_w
        elif weighted != has_w:
            raise EdgeListParseError(path, lineno, "mixing weighted and unweighted edges")
        if has_w:
            try:
                wv = float(parts[2])
            except ValueError:
                raise EdgeListParseError(path, lineno, f"bad weight {parts[2]!r}") from None
            if not (np.isfinite(wv) and wv > 0):
                raise EdgeListParseError(path, lineno, "weights must be positive")
            weights.append(wv)
        edges.append((s, t))
    if n_nodes is None:
        raise GraphError(f"{path}: empty edge-list file")
    return n_nodes, edges, (weights if weighted else None)


def load_edge_list(path) -> TransitionModel:
    """Read the text edge-list format (see :func:`save_edge_list`)."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        n_nodes, edges, weights = _parse_edge_list(fh, path)
    return build_from_edges(n_nodes, edges, weights)


def save_edge_list(model: TransitionModel, path) -> None:
    """Write ``model`` as ``N`` followed by ``source target [weight]`` lines.

    Rows that are uniform over their out-links are written without weights;
    other rows carry their probabilities as weights. Repaired dangling rows
    are omitted, so loading the file rebuilds the same model.
    """
    lines = [str(model.n_nodes)]
    offs, cols, probs = model.row_offsets, model.col_indices, model.probs
    weighted = any(
        not model.dangling[i] and np.any(probs[offs[i]:offs[i + 1]] != 1.0 / (offs[i + 1] - offs[i]))
        for i in range(model.n_nodes)
    )
    for i in range(model.n_nodes):
        if model.dangling[i]:
            continue
        for k in range(offs[i], offs[i + 1]):
            if weighted:
                lines.append(f"{i} {cols[k]} {float(probs[k])!r}")
            else:
                lines.append(f"{i} {cols[k]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
