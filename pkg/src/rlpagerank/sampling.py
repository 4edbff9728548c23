"""Split sampling: X uniform over nodes, Y drawn from row X of P.

Each :class:`Sampler` owns two counter-based substreams derived from
``(seed, stream)``: one for X and one for Y. Row laws are sampled in O(1)
with per-row Vose alias tables laid out parallel to the CSR arrays.
"""
from __future__ import annotations

from typing import List, NamedTuple

import numpy as np

from . import kernels
from .graph import TransitionModel

_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


class SamplePair(NamedTuple):
    x: int
    y: int


def derive_key(seed: int, substream: int) -> int:
    """Key of substream ``substream`` under ``seed`` (both unsigned 64-bit)."""
    return kernels.mix64((kernels.mix64(seed & _MASK64) + (substream + 1) * _GAMMA) & _MASK64)


def build_alias_tables(model: TransitionModel) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias tables for every row, aligned with ``model.col_indices``.

    Slot ``k`` of row ``i`` keeps its own column with probability
    ``alias_prob[k]`` and otherwise yields column ``alias_col[k]``.
    """
    offs, cols, probs = model.row_offsets, model.col_indices, model.probs
    alias_prob = np.ones(probs.shape[0])
    alias_col = cols.copy()
    for i in range(model.n_nodes):
        lo, hi = int(offs[i]), int(offs[i + 1])
        d = hi - lo
        if d == 1:
            continue
        scaled = (probs[lo:hi] * d).tolist()
        small = [k for k, w in enumerate(scaled) if w < 1.0]
        large = [k for k, w in enumerate(scaled) if w >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            alias_prob[lo + s] = scaled[s]
            alias_col[lo + s] = cols[lo + g]
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        # leftovers are 1 up to rounding
        for k in small + large:
            alias_prob[lo + k] = 1.0
            alias_col[lo + k] = cols[lo + k]
    return alias_prob, alias_col


def alias_reconstruction(model: TransitionModel, alias_prob: np.ndarray,
                         alias_col: np.ndarray) -> np.ndarray:
    """Probabilities implied by the alias tables, aligned with ``col_indices``."""
    offs, cols = model.row_offsets, model.col_indices
    out = np.zeros(cols.shape[0])
    for i in range(model.n_nodes):
        lo, hi = int(offs[i]), int(offs[i + 1])
        d = hi - lo
        pos = {int(c): lo + k for k, c in enumerate(cols[lo:hi])}
        for k in range(lo, hi):
            out[k] += alias_prob[k] / d
            out[pos[int(alias_col[k])]] += (1.0 - alias_prob[k]) / d
    return out


class Sampler:
    """Seeded source of :class:`SamplePair` draws for one model.

    Two samplers with the same ``(seed, stream)`` produce the same sequence.
    Distinct ``stream`` values give independent substreams under one seed.
    """

    def __init__(self, model: TransitionModel, seed: int, stream: int = 0):
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.model = model
        self.seed = seed
        self.stream = stream
        self.x_key = derive_key(seed, 2 * stream)
        self.y_key = derive_key(seed, 2 * stream + 1)
        self.x_ctr = 0
        self.y_ctr = 0
        self.alias_prob, self.alias_col = build_alias_tables(model)
        self._xs = np.empty(1, dtype=np.int64)
        self._ys = np.empty(1, dtype=np.int64)

    @property
    def n_nodes(self) -> int:
        return self.model.n_nodes

    def fill(self, xs: np.ndarray, ys: np.ndarray) -> None:
        """Draw ``len(xs)`` pairs into the given int64 buffers."""
        self.x_ctr, self.y_ctr = kernels.sample_pairs(
            self.x_key, self.x_ctr, self.y_key, self.y_ctr,
            self.model.row_offsets, self.model.col_indices,
            self.alias_prob, self.alias_col, xs, ys)

    def draw(self) -> SamplePair:
        self.fill(self._xs, self._ys)
        return SamplePair(int(self._xs[0]), int(self._ys[0]))

    def draw_batch(self, m: int) -> List[SamplePair]:
        """``m`` independent pairs, consuming the streams exactly like ``m`` draws."""
        if m < 1:
            raise ValueError("batch size must be at least 1")
        xs = np.empty(m, dtype=np.int64)
        ys = np.empty(m, dtype=np.int64)
        self.fill(xs, ys)
        return [SamplePair(int(x), int(y)) for x, y in zip(xs, ys)]

    def draw_arrays(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        xs = np.empty(count, dtype=np.int64)
        ys = np.empty(count, dtype=np.int64)
        self.fill(xs, ys)
        return xs, ys

    def run_steps(self, z: np.ndarray, steps: np.ndarray, c: float, m: int) -> None:
        """Draw and apply ``len(steps)`` estimator updates to ``z`` in place."""
        self.x_ctr, self.y_ctr = kernels.run_steps(
            z, steps, c, m, self.x_key, self.x_ctr, self.y_key, self.y_ctr,
            self.model.row_offsets, self.model.col_indices,
            self.alias_prob, self.alias_col)
