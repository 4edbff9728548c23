"""Stochastic-approximation PageRank iteration.

The state ``z`` tracks the fixed point of ``z = 1 + c P^T z``. One step
draws a split sample ``(x, y)`` and applies

    z[x] += a(n) * (1 - z[x])
    z[y] += a(n) * c * z[x]

with both increments computed from the pre-step values. The update only
sees samples; it never reads the transition probabilities.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import mpmath
import numpy as np

from . import analysis
from .graph import TransitionModel
from .sampling import SamplePair, Sampler

SCHEDULE_KINDS = ("polynomial", "piecewise-constant")


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``a(n)``.

    ``polynomial``: ``a0 / (1 + n/offset)**exponent`` with exponent in
    (0.5, 1].

    ``piecewise-constant``: ``a0 * ratio**k`` on block ``k``, where block
    ``k`` lasts ``ceil(plateau / ratio**k)`` steps. Growing blocks keep the
    sum of steps divergent while the sum of squares converges. In
    ``tracking`` mode values are clipped below at ``floor``, which gives a
    non-vanishing step (not a convergent schedule).
    """

    kind: str = "polynomial"
    a0: float = 0.5
    offset: float = 100.0
    exponent: float = 0.6
    plateau: int = 1000
    ratio: float = 0.5
    tracking: bool = False
    floor: float = 0.0
    _bounds: list = field(default_factory=lambda: [0], init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise EstimatorError(f"unknown schedule kind {self.kind!r}")
        if not self.a0 > 0:
            raise EstimatorError("a0 must be positive")
        if self.kind == "polynomial":
            if not self.offset > 0:
                raise EstimatorError("offset must be positive")
            if not 0.5 < self.exponent <= 1.0:
                raise EstimatorError("exponent must lie in (0.5, 1]")
            if self.tracking:
                raise EstimatorError("tracking mode applies to piecewise-constant schedules only")
        else:
            if self.plateau < 1:
                raise EstimatorError("plateau must be at least 1")
            if not 0.0 < self.ratio < 1.0:
                raise EstimatorError("ratio must lie in (0, 1)")
            if self.tracking and not self.floor > 0:
                raise EstimatorError("tracking mode needs a positive floor")
            if not self.tracking and self.floor != 0:
                raise EstimatorError("floor is only used in tracking mode")

    @classmethod
    def constant(cls, a: float) -> "StepSchedule":
        """Constant step ``a`` (tracking mode; not Robbins-Monro)."""
        return cls(kind="piecewise-constant", a0=a, ratio=0.5, plateau=1, tracking=True, floor=a)

    @property
    def robbins_monro(self) -> bool:
        return not self.tracking

    def _block_bounds(self, n_max: int) -> np.ndarray:
        # bounds[k] is the first step of block k
        b = self._bounds
        while b[-1] <= n_max:
            k = len(b) - 1
            if self.tracking and self.a0 * self.ratio ** k <= self.floor:
                break
            b.append(b[-1] + math.ceil(self.plateau / self.ratio ** k))
        return np.asarray(b, dtype=np.int64)

    def steps(self, start: int, count: int) -> np.ndarray:
        """``a(start), ..., a(start + count - 1)``."""
        if start < 0:
            raise EstimatorError("step index must be non-negative")
        if self.kind == "polynomial":
            n = np.arange(start, start + count, dtype=np.float64)
            return self.a0 / (1.0 + n / self.offset) ** self.exponent
        n = np.arange(start, start + count, dtype=np.int64)
        bounds = self._block_bounds(start + count)
        k = np.searchsorted(bounds, n, side="right") - 1
        out = self.a0 * self.ratio ** k.astype(np.float64)
        if self.tracking:
            out = np.maximum(out, self.floor)
        return out

    def __call__(self, n: int) -> float:
        return float(self.steps(n, 1)[0])

    def partial_sum(self, n: int) -> float:
        """``sum(a(k) for k in range(n + 1))`` in closed form."""
        if n < 0:
            return 0.0
        if self.kind == "polynomial":
            with mpmath.workdps(40):
                K, rho = mpmath.mpf(self.offset), mpmath.mpf(self.exponent)
                if self.exponent == 1.0:
                    s = K * (mpmath.digamma(K + n + 1) - mpmath.digamma(K))
                else:
                    s = K ** rho * (mpmath.zeta(rho, K) - mpmath.zeta(rho, K + n + 1))
                return float(self.a0 * s)
        total = 0.0
        k, lo = 0, 0
        while lo <= n:
            step = self.a0 * self.ratio ** k
            if self.tracking and step <= self.floor:
                return total + self.floor * (n + 1 - lo)
            hi = lo + math.ceil(self.plateau / self.ratio ** k)
            total += step * (min(hi, n + 1) - lo)
            k, lo = k + 1, hi
        return total

    def first_index_reaching(self, target: float) -> int:
        """Smallest ``n`` with ``partial_sum(n) >= target``."""
        if self.partial_sum(0) >= target:
            return 0
        lo, hi = 0, 1
        while self.partial_sum(hi) < target:
            lo, hi = hi, 2 * hi
            if hi > 2**62:
                raise EstimatorError("step sums do not reach the target within 2**62 steps")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.partial_sum(mid) >= target:
                hi = mid
            else:
                lo = mid
        return hi


DEFAULT_SCHEDULE = StepSchedule()


def step_size(schedule: StepSchedule, n: int) -> float:
    return schedule(n)


@dataclass
class EstimatorState:
    z: np.ndarray
    n: int
    schedule: StepSchedule
    c: float
    m: int = 1

    @property
    def n_nodes(self) -> int:
        return self.z.shape[0]

    def copy(self) -> "EstimatorState":
        return EstimatorState(self.z.copy(), self.n, self.schedule, self.c, self.m)


@dataclass
class StepDecomposition:
    drift: np.ndarray
    noise: np.ndarray

    @property
    def realized(self) -> np.ndarray:
        return self.drift + self.noise


def init_state(n_nodes: int, c: float = 0.85, schedule: StepSchedule = DEFAULT_SCHEDULE,
               m: int = 1) -> EstimatorState:
    """All-ones start at step 0."""
    if not 0.0 < c < 1.0:
        raise EstimatorError(f"damping c must lie in (0, 1), got {c}")
    if n_nodes < 1:
        raise EstimatorError("n_nodes must be positive")
    if m < 1:
        raise EstimatorError("batch size must be at least 1")
    return EstimatorState(np.ones(n_nodes), 0, schedule, float(c), int(m))


def _check_index(state: EstimatorState, sample: SamplePair) -> None:
    n = state.n_nodes
    x, y = sample
    if not (0 <= x < n and 0 <= y < n):
        raise EstimatorError(f"sample {tuple(sample)} does not fit a state of dimension {n}")


def rl_step(state: EstimatorState, sample: SamplePair) -> EstimatorState:
    """One update from a single pair; mutates and returns ``state``.

    When ``x == y`` both increments land on the same entry in one step.
    """
    _check_index(state, sample)
    a = state.schedule(state.n)
    z, c = state.z, state.c
    x, y = sample
    zx = float(z[x])
    if x == y:
        z[x] = zx + a * ((1.0 - zx) + c * zx)
    else:
        z[x] = zx + a * (1.0 - zx)
        z[y] = float(z[y]) + a * (c * zx)
    state.n += 1
    return state


def rl_step_batch(state: EstimatorState, samples: Sequence[SamplePair]) -> EstimatorState:
    """One update from ``state.m`` pairs; mutates and returns ``state``.

    The x-term fires once per distinct x (set membership); the y-term sums
    ``c * z[x_j]`` over every pair with ``y_j == i``. All reads use the
    pre-step iterate.
    """
    if len(samples) != state.m:
        raise EstimatorError(f"expected {state.m} samples, got {len(samples)}")
    samples = [SamplePair(*s) for s in samples]
    for s in samples:
        _check_index(state, s)
    a = state.schedule(state.n)
    z, c = state.z, state.c
    yterm: dict = {}
    for x, y in samples:
        yterm[y] = yterm.get(y, 0.0) + c * float(z[x])
    xset = {s.x for s in samples}
    new = {}
    for i in xset | yterm.keys():
        zi = float(z[i])
        xt = (1.0 - zi) if i in xset else 0.0
        new[i] = zi + a * (xt + yterm.get(i, 0.0))
    for i, v in new.items():
        z[i] = v
    state.n += 1
    return state


def decompose_step(state: EstimatorState, sample: SamplePair,
                   model: TransitionModel) -> StepDecomposition:
    """Split the bracketed update into its conditional mean and the noise.

    Diagnostic only: it needs the transition probabilities, which the
    estimator itself never touches.
    """
    _check_index(state, sample)
    if model.n_nodes != state.n_nodes:
        raise EstimatorError("model and state dimensions differ")
    z, c = state.z, state.c
    x, y = sample
    realized = np.zeros(state.n_nodes)
    realized[x] += 1.0 - z[x]
    realized[y] += c * z[x]
    drift = np.zeros(state.n_nodes)
    drift[x] = 1.0 - z[x]
    drift += c * z[x] * model.row(x)
    return StepDecomposition(drift, realized - drift)


def expected_drift(state: EstimatorState, model: TransitionModel) -> np.ndarray:
    """Exact mean of the drift over X uniform on the nodes."""
    total = np.zeros(state.n_nodes)
    for x in range(state.n_nodes):
        total += decompose_step(state, SamplePair(x, x), model).drift
    return total / state.n_nodes


def run(model: TransitionModel, sampler: Sampler, state: EstimatorState, n_iters: int,
        checkpoint_every: int, oracle_z: Optional[np.ndarray] = None,
        criterion: Optional["analysis.RankCriterion"] = None,
        wall_clock: bool = False) -> "analysis.ConvergenceTrace":
    """Apply ``n_iters`` updates, recording a trace row every ``checkpoint_every``.

    Metrics need ``oracle_z`` (and ``criterion`` for the ranking miss);
    without them the columns hold NaN. ``wall_nanos`` is 0 unless
    ``wall_clock`` is set, keeping traces byte-reproducible by default.
    """
    if n_iters < 1:
        raise EstimatorError("n_iters must be at least 1")
    if checkpoint_every < 1:
        raise EstimatorError("checkpoint_every must be at least 1")
    if model.n_nodes != state.n_nodes or sampler.n_nodes != state.n_nodes:
        raise EstimatorError("model, sampler and state dimensions differ")
    trace = analysis.ConvergenceTrace()
    t0 = time.perf_counter_ns()
    done = 0
    while done < n_iters:
        chunk = min(checkpoint_every, n_iters - done)
        steps = state.schedule.steps(state.n, chunk)
        sampler.run_steps(state.z, steps, state.c, state.m)
        state.n += chunk
        done += chunk
        if not np.all(np.isfinite(state.z)) or state.z.min() < 0:
            raise EstimatorError(f"iterate left the non-negative reals at step {state.n}")
        l1 = miss = math.nan
        if oracle_z is not None:
            l1 = analysis.l1_distance(state.z, oracle_z)
            if criterion is not None:
                miss = analysis.rank_miss_pct(state.z, oracle_z, criterion)
        wall = time.perf_counter_ns() - t0 if wall_clock else 0
        trace.append(analysis.TraceRow(state.n, l1, miss, wall))
    return trace
