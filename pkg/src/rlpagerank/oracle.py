"""Exact reference computations for the estimator.

The fixed point ``z* = 1 + c P^T z*`` is found by Neumann sweeps, which
contract at rate ``c`` in the L1 norm. It is proportional to the stationary
law of the Google matrix: ``pi = (1-c)/N * z*``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import GoogleMatrix, TransitionModel

DENSE_GUARD = 2000
MAX_SWEEPS = 100_000


class OracleError(RuntimeError):
    pass


class DenseGuardError(ValueError):
    pass


@dataclass(frozen=True)
class FixedPoint:
    z_star: np.ndarray
    residual: float
    sweeps: int


def _check_c(c: float) -> None:
    if not 0.0 < c < 1.0:
        raise ValueError(f"damping c must lie in (0, 1), got {c}")


def _vector(z, model: TransitionModel) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (model.n_nodes,):
        raise ValueError(f"expected a vector of length {model.n_nodes}, got shape {z.shape}")
    return z


def solve_fixed_point(model: TransitionModel, c: float, tol: float = 1e-13,
                      max_sweeps: int = MAX_SWEEPS) -> FixedPoint:
    """Iterate ``z <- 1 + c P^T z`` from ``z = 1`` until ``|dz|_1 <= tol (1-c)``."""
    _check_c(c)
    if not tol > 0:
        raise ValueError("tol must be positive")
    ones = np.ones(model.n_nodes)
    z = ones.copy()
    for sweep in range(1, max_sweeps + 1):
        z_new = ones + c * model.transpose_matvec(z)
        delta = np.abs(z_new - z).sum()
        z = z_new
        if delta <= tol * (1.0 - c):
            break
    else:
        raise OracleError(f"fixed-point sweeps did not converge in {max_sweeps} iterations")
    residual = float(np.abs(ones + c * model.transpose_matvec(z) - z).sum())
    return FixedPoint(z, residual, sweep)


def stationary_power_method(gm: GoogleMatrix, tol: float = 1e-13,
                            max_iter: int = MAX_SWEEPS) -> np.ndarray:
    """Stationary distribution of the Google matrix by left power iteration."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = gm.n_nodes
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = gm.left_multiply(pi)
        if np.abs(nxt - pi).sum() <= tol:
            pi = nxt
            break
        pi = nxt
    else:
        raise OracleError(f"power method did not converge in {max_iter} iterations")
    return pi / pi.sum()


def ode_field(z, model: TransitionModel, c: float) -> np.ndarray:
    """Mean-field vector ``1 + c P^T z - z``."""
    z = _vector(z, model)
    return 1.0 + c * model.transpose_matvec(z) - z


def ode_field_scaled(z, model: TransitionModel, c: float) -> np.ndarray:
    """Large-scale limit ``c P^T z - z`` of the mean field."""
    z = _vector(z, model)
    return c * model.transpose_matvec(z) - z


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a truncated Taylor series.

    The matrix is scaled by ``2**-s`` with ``s = ceil(log2(max(1, |A|_1)))``
    and the series is summed until a term drops below ``1e-16`` of the
    partial sum (both in the induced 1-norm).
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    norm = np.abs(a).sum(axis=0).max() if n else 0.0
    s = max(0, math.ceil(math.log2(norm))) if norm > 1.0 else 0
    b = a / 2.0 ** s
    total = np.eye(n)
    term = np.eye(n)
    for k in range(1, 200):
        term = term @ b / k
        total = total + term
        if np.abs(term).sum(axis=0).max() <= 1e-16 * np.abs(total).sum(axis=0).max():
            break
    for _ in range(s):
        total = total @ total
    return total


def _generator(model: TransitionModel, c: float, T: float) -> np.ndarray:
    n = model.n_nodes
    if n > DENSE_GUARD:
        raise DenseGuardError(f"N={n} exceeds the dense guard of {DENSE_GUARD} nodes")
    return (c * model.to_dense().T - np.eye(n)) * (T / n)


def flow_exponential(model: TransitionModel, c: float, T: float) -> np.ndarray:
    """``exp(((c P^T - I)/N) T)``, the linear part of the time-T flow."""
    _check_c(c)
    if T < 0:
        raise ValueError("T must be non-negative")
    return expm(_generator(model, c, T))


def matrix_exponential_1norm(model: TransitionModel, c: float, T: float) -> float:
    """Induced 1-norm (max column sum) of :func:`flow_exponential`."""
    if not T > 0:
        raise ValueError("T must be positive")
    e = flow_exponential(model, c, T)
    return float(np.abs(e).sum(axis=0).max())


def flow_map(z, model: TransitionModel, c: float, T: float, z_star=None) -> np.ndarray:
    """Solution at time T of ``dz/dt = (1 + c P^T z - z)/N`` started at ``z``.

    Evaluated in closed form as ``E (z - z*) + z*`` with ``E`` from
    :func:`flow_exponential`; note ``(c P^T - I)^{-1} 1 = -z*``.
    """
    z = _vector(z, model)
    if z_star is None:
        z_star = solve_fixed_point(model, c).z_star
    return flow_exponential(model, c, T) @ (z - z_star) + z_star
