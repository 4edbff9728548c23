"""Convergence metrics, the (m, M) ranking criterion and sample-complexity diagnostics."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, NamedTuple, Optional, Sequence

import numpy as np

from . import oracle
from .graph import TransitionModel

TRACE_COLUMNS = ("n", "l1_distance", "rank_miss_pct", "wall_nanos")

K_NOTE = ("the concentration constant K is unspecified; the probability bound is "
          "reported in form only, never as a number")
BOUND_FORM = ("P(z_n in N_delta(C^(gamma/2)) for all n >= n0 + k) >= "
              "1 - 2N exp(-K delta^2 / (N sum_{j>=k} a(j)^2))")


class AnalysisError(ValueError):
    pass


def _pair(z, z_star):
    z = np.asarray(z, dtype=np.float64)
    z_star = np.asarray(z_star, dtype=np.float64)
    if z.shape != z_star.shape or z.ndim != 1:
        raise AnalysisError(f"dimension mismatch: {z.shape} vs {z_star.shape}")
    return z, z_star


def l1_distance(z, z_star) -> float:
    z, z_star = _pair(z, z_star)
    return float(np.abs(z - z_star).sum())


def top_indices(z, k: int) -> np.ndarray:
    """Indices of the ``k`` largest entries, largest first; ties go to the lower index."""
    z = np.asarray(z)
    if not 0 <= k <= z.shape[0]:
        raise AnalysisError(f"k={k} outside [0, {z.shape[0]}]")
    return np.lexsort((np.arange(z.shape[0]), -z))[:k]


@dataclass(frozen=True)
class RankCriterion:
    """Target: the top ``m`` entries of z* appear among the top ``M`` of z.

    ``m == M`` is accepted (the "same top set" criterion); the usual case
    is ``m < M``.
    """

    m: int
    M: int

    def __post_init__(self):
        if not 1 <= self.m <= self.M:
            raise AnalysisError(f"need 1 <= m <= M, got m={self.m}, M={self.M}")

    def check(self, z_star) -> None:
        """Reject instances without a strict value gap at the cut.

        For ``m < M`` the m-th largest value of z* must exceed the M-th;
        for ``m == M`` it must exceed the (m+1)-th.
        """
        v = np.sort(np.asarray(z_star, dtype=np.float64))[::-1]
        if self.M >= v.shape[0]:
            raise AnalysisError(f"M={self.M} must be smaller than N={v.shape[0]}")
        cut = self.M - 1 if self.m < self.M else self.M
        if not v[self.m - 1] > v[cut]:
            raise AnalysisError(
                f"degenerate criterion: z*_({self.m}) = {v[self.m - 1]!r} does not exceed "
                f"z*_({cut + 1}) = {v[cut]!r}")

    @classmethod
    def for_oracle(cls, z_star, m: int, M: int) -> "RankCriterion":
        crit = cls(m, M)
        crit.check(z_star)
        return crit


def rank_miss_pct(z, z_star, crit: RankCriterion) -> float:
    """Percentage of the top-m indices of z* missing from the top-M of z."""
    z, z_star = _pair(z, z_star)
    truth = top_indices(z_star, crit.m)
    found = top_indices(z, crit.M)
    missing = np.setdiff1d(truth, found).size
    return 100.0 * missing / crit.m


# -- the good set and its neighbours ---------------------------------------

def in_C(z, z_star, crit: RankCriterion) -> bool:
    """Closed membership test: each top-m index of z* reaches the M-th largest value of z."""
    z, z_star = _pair(z, z_star)
    level = np.sort(z)[::-1][crit.M - 1]
    return bool(np.all(z[top_indices(z_star, crit.m)] >= level))


def _strictly_outside(z, top, M) -> bool:
    level = np.sort(z)[::-1][M - 1]
    return bool(np.any(z[top] < level))


def in_C_star(z, z_star, crit: RankCriterion, kappa: float) -> bool:
    """Points of C no farther from z* than the boundary of C (radius ``kappa``)."""
    z, z_star = _pair(z, z_star)
    p = z_star / z_star.sum()
    return in_C(z, p, crit) and l1_distance(z, p) <= kappa


def distance_to_C(x, z_star, crit: RankCriterion, max_nodes: int = 12) -> float:
    """L1 distance from ``x`` to C within the simplex, by enumerating the top-M sets.

    Each candidate top set J (containing the top-m indices of z*) gives a
    linear program; only practical for small N.
    """
    from scipy.optimize import linprog

    x, z_star = _pair(x, z_star)
    n = x.shape[0]
    if n > max_nodes:
        raise AnalysisError(f"distance_to_C enumerates subsets; N={n} exceeds {max_nodes}")
    if in_C(x, z_star, crit):
        return 0.0
    top = [int(i) for i in top_indices(z_star, crit.m)]
    rest = [i for i in range(n) if i not in top]
    best = math.inf
    # variables: z (n), u (n) with u >= |z - x|
    cost = np.r_[np.zeros(n), np.ones(n)]
    eye = np.eye(n)
    base_ub = [np.hstack([eye, -eye]), np.hstack([-eye, -eye])]
    base_rhs = [x, -x]
    a_eq = np.r_[np.ones(n), np.zeros(n)][None, :]
    for extra in itertools.combinations(rest, crit.M - crit.m):
        outside = [k for k in rest if k not in extra]
        rows = []
        for i in top:
            for k in outside:
                r = np.zeros(2 * n)
                r[k], r[i] = 1.0, -1.0
                rows.append(r)
        a_ub = np.vstack(base_ub + ([np.array(rows)] if rows else []))
        b_ub = np.concatenate(base_rhs + ([np.zeros(len(rows))] if rows else []))
        res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                      bounds=[(0, None)] * (2 * n), method="highs")
        if res.success:
            best = min(best, float(res.fun))
    return best


def in_C_eps(x, z_star, crit: RankCriterion, eps: float) -> bool:
    return distance_to_C(x, z_star, crit) < eps


# -- kappa ---------------------------------------------------------------------

def _balanced_exit(p: np.ndarray, i: int, group: np.ndarray) -> tuple[float, np.ndarray]:
    """Move mass from ``p[i]`` onto ``group`` until they tie at a common level.

    Returns the L1 cost and the resulting point, which lies on the boundary
    of C when ``group`` holds M indices other than ``i``.
    """
    vals = np.sort(p[group])
    zi = p[i]
    # solve zi - t = sum(max(0, t - v)) over the piecewise-linear pieces
    level = zi
    for k in range(1, vals.shape[0] + 1):
        t = (zi + vals[:k].sum()) / (k + 1)
        if k == vals.shape[0] or t <= vals[k]:
            level = t
            break
    level = min(level, zi)
    q = p.copy()
    q[group] = np.maximum(q[group], level)
    q[i] = level
    return 2.0 * (zi - level), q


def estimate_kappa(z_star, crit: RankCriterion, n_samples: int = 1000, seed: int = 0) -> float:
    """Seeded estimate of the L1 distance from z*/sum(z*) to the complement of C.

    Candidates are, in order: balanced mass transfers from each top-m index
    onto the M strongest other indices, plain value swaps across the cut,
    then ``n_samples`` random simplex points located on the boundary by
    bisection along the segment from z*. The running minimum is returned,
    so the value is an upper estimate of the true infimum and never
    increases with ``n_samples`` under a fixed seed.
    """
    z_star = np.asarray(z_star, dtype=np.float64)
    if n_samples < 1000:
        raise AnalysisError("use at least 1000 samples")
    p = z_star / z_star.sum()
    crit.check(p)
    n = p.shape[0]
    top = top_indices(p, crit.m)
    best = math.inf
    for i in top:
        others = top_indices(np.where(np.arange(n) == i, -np.inf, p), crit.M)
        cost, _ = _balanced_exit(p, int(i), others)
        best = min(best, cost)
        k = others[-1]
        best = min(best, 2.0 * abs(p[i] - p[k]))

    rng = np.random.default_rng(seed)
    concentrations = (0.1, 1.0, 10.0)
    for s in range(n_samples):
        q = rng.dirichlet(np.full(n, concentrations[s % 3]))
        if not _strictly_outside(q, top, crit.M):
            continue
        lo, hi = 0.0, 1.0
        span = q - p
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _strictly_outside(p + mid * span, top, crit.M):
                hi = mid
            else:
                lo = mid
        best = min(best, hi * float(np.abs(span).sum()))
    return float(best)


# -- traces ----------------------------------------------------------------------

class TraceRow(NamedTuple):
    n: int
    l1_distance: float
    rank_miss_pct: float
    wall_nanos: int


def _fmt(v: float) -> str:
    return format(v, ".17g")


def _short(v: float) -> str:
    return repr(float(v))


@dataclass
class ConvergenceTrace:
    rows: List[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow) -> None:
        if self.rows and row.n <= self.rows[-1].n:
            raise AnalysisError("trace rows must have strictly increasing n")
        self.rows.append(row)

    def __iter__(self) -> Iterator[TraceRow]:
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def value_at(self, n: int, name: str = "l1_distance") -> float:
        for r in self.rows:
            if r.n == n:
                return getattr(r, name)
        raise KeyError(n)

    def iterations_to_criterion(self) -> Optional[int]:
        """Step count of the first row from which rank_miss_pct stays at 0."""
        hit = None
        for r in self.rows:
            if r.rank_miss_pct == 0:
                if hit is None:
                    hit = r.n
            else:
                hit = None
        return hit

    def iterations_to_l1(self, threshold: float, scale: float = 1.0) -> Optional[int]:
        for r in self.rows:
            if r.l1_distance / scale <= threshold:
                return r.n
        return None

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            for r in self.rows:
                fh.write(f"{r.n},{_fmt(r.l1_distance)},{_fmt(r.rank_miss_pct)},{r.wall_nanos}\n")

    @classmethod
    def from_csv(cls, path) -> "ConvergenceTrace":
        trace = cls()
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != TRACE_COLUMNS:
                raise AnalysisError(f"unexpected trace header {header}")
            for rec in reader:
                trace.append(TraceRow(int(rec[0]), float(rec[1]), float(rec[2]), int(rec[3])))
        return trace


# -- sample complexity -----------------------------------------------------------

@dataclass
class ComplexityReport:
    """Instantiated sample-complexity quantities for one instance.

    ``kappa_lb`` holds the kappa value used in the bound. When it comes from
    :func:`estimate_kappa` it is an upper estimate of the true kappa, so
    ``tau`` and ``n0`` may be optimistic; ``kappa_source`` records which.
    """

    n_nodes: int
    c: float
    T: float
    norm1: float
    kappa_lb: float
    gamma: float
    tau: float
    n0: int
    delta: float
    kappa_source: str
    grid: List[tuple] = field(default_factory=list)
    K_note: str = K_NOTE
    bound_form: str = BOUND_FORM

    def to_text(self) -> str:
        lines = [
            f"n_nodes = {self.n_nodes}",
            f"c = {_short(self.c)}",
            f"T = {_short(self.T)}",
            f"norm1 = {_short(self.norm1)}",
            f"kappa_lb = {_short(self.kappa_lb)}",
            f"kappa_source = {self.kappa_source}",
            f"gamma = {_short(self.gamma)}",
            f"tau = {_short(self.tau)}",
            f"n0 = {self.n0}",
            f"delta = {_short(self.delta)}",
        ]
        for T, norm1, tau in self.grid:
            lines.append(f"grid.T_{_short(T)} = norm1 {_short(norm1)} tau {_short(tau)}")
        lines.append(f"bound_form = {self.bound_form}")
        lines.append(f"K_note = {self.K_note}")
        return "\n".join(lines) + "\n"


def tau_bound(T: float, norm1: float, kappa: float) -> float:
    return 4.0 * (T + 1.0) / ((1.0 - norm1) * kappa)


def delta_radius(gamma: float, n_nodes: int) -> float:
    return gamma / (2.0 * math.sqrt(n_nodes))


def complexity_report(model: TransitionModel, c: float, crit: Optional[RankCriterion],
                      schedule, T_grid: Sequence[float], seed: int = 0,
                      kappa: Optional[float] = None, n_samples: int = 2000) -> ComplexityReport:
    """Evaluate the flow-time contraction, tau, n0 and delta over ``T_grid``.

    Picks the T with the smallest tau. ``kappa`` overrides the Monte-Carlo
    estimate (needed when the instance is too small for a criterion).
    """
    T_grid = [float(t) for t in T_grid]
    if not T_grid:
        raise AnalysisError("T_grid is empty")
    if any(t <= 0 for t in T_grid):
        raise AnalysisError("every T must be positive")
    n = model.n_nodes
    if kappa is None:
        if crit is None:
            raise AnalysisError("need a criterion or an explicit kappa")
        z_star = oracle.solve_fixed_point(model, c).z_star
        kappa = estimate_kappa(z_star, crit, n_samples=n_samples, seed=seed)
        source = f"estimate(n_samples={n_samples}, seed={seed})"
    else:
        if not kappa > 0:
            raise AnalysisError("kappa must be positive")
        source = "given"
    grid = []
    for T in T_grid:
        norm1 = oracle.matrix_exponential_1norm(model, c, T)
        if not norm1 < 1.0:
            raise AnalysisError(f"exponential norm {norm1!r} is not below 1 at T={T}")
        grid.append((T, norm1, tau_bound(T, norm1, kappa)))
    T, norm1, tau = min(grid, key=lambda g: g[2])
    gamma = (1.0 - norm1) * kappa
    return ComplexityReport(
        n_nodes=n, c=float(c), T=T, norm1=norm1, kappa_lb=float(kappa), gamma=gamma,
        tau=tau, n0=schedule.first_index_reaching(tau), delta=delta_radius(gamma, n),
        kappa_source=source, grid=grid)
