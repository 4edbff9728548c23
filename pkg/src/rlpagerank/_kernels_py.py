"""Pure-Python/numpy implementation of the hot kernels.

This is the reference the compiled ``_kernels`` extension must reproduce bit
for bit. Random numbers come from SplitMix64 used as a counter-based
generator: draw ``k`` of a stream with key ``s`` is ``mix64(s + (k+1)*GAMMA)``.
Bounded integers use Lemire's multiply-shift reduction with rejection, so
every value in ``[0, n)`` is exactly equally likely.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_M53 = 2.0 ** -53

_U = np.uint64
_LO32 = _U(0xFFFFFFFF)


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def draw64(key: int, ctr: int) -> int:
    return mix64(key + ((ctr + 1) * GAMMA))


def bounded(key: int, ctr: int, n: int) -> tuple[int, int]:
    """Uniform integer in ``[0, n)``; returns ``(value, new_ctr)``."""
    r = draw64(key, ctr)
    ctr += 1
    m = r * n
    low = m & MASK64
    if low < n:
        t = ((1 << 64) - n) % n
        while low < t:
            r = draw64(key, ctr)
            ctr += 1
            m = r * n
            low = m & MASK64
    return m >> 64, ctr


def unit(key: int, ctr: int) -> tuple[float, int]:
    return (draw64(key, ctr) >> 11) * _TWO_M53, ctr + 1


# -- vectorized helpers ---------------------------------------------------

def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U(30))) * _U(_M1)
    z = (z ^ (z >> _U(27))) * _U(_M2)
    return z ^ (z >> _U(31))


def _draw_block(key: int, ctr: int, count: int) -> np.ndarray:
    # arithmetic below wraps modulo 2**64, which is the intent
    idx = np.arange(count, dtype=np.uint64) + _U((ctr + 1) & MASK64)
    return _mix64_vec(_U(key & MASK64) + idx * _U(GAMMA))


def _mul_hi_lo(r: np.ndarray, n) -> tuple[np.ndarray, np.ndarray]:
    n = np.asarray(n, dtype=np.uint64)
    rl, rh = r & _LO32, r >> _U(32)
    nl, nh = n & _LO32, n >> _U(32)
    p0 = rl * nl
    p1 = rh * nl
    p2 = rl * nh
    p3 = rh * nh
    mid = (p0 >> _U(32)) + (p1 & _LO32) + (p2 & _LO32)
    hi = p3 + (p1 >> _U(32)) + (p2 >> _U(32)) + (mid >> _U(32))
    return hi, r * n


def _rejection_threshold(n) -> np.ndarray:
    n = np.asarray(n, dtype=np.uint64)
    return (_U(0) - n) % n


def uniform_ints(key: int, ctr: int, bound: int, out: np.ndarray) -> int:
    """Fill ``out`` with uniform integers in ``[0, bound)``; returns the new counter."""
    count = out.shape[0]
    t = int(_rejection_threshold(bound))
    pos = 0
    while pos < count:
        draws = _draw_block(key, ctr, count - pos)
        hi, lo = _mul_hi_lo(draws, bound)
        bad = np.flatnonzero(lo < _U(t))
        stop = count - pos if bad.size == 0 else int(bad[0])
        out[pos:pos + stop] = hi[:stop]
        pos += stop
        ctr += stop
        if bad.size:
            out[pos], ctr = bounded(key, ctr, bound)
            pos += 1
    return ctr


def _y_scalar(key, ctr, x, row_offsets, col_indices, alias_prob, alias_col):
    off = int(row_offsets[x])
    d = int(row_offsets[x + 1]) - off
    k, ctr = bounded(key, ctr, d)
    u, ctr = unit(key, ctr)
    if u < alias_prob[off + k]:
        return int(col_indices[off + k]), ctr
    return int(alias_col[off + k]), ctr


def sample_pairs(x_key, x_ctr, y_key, y_ctr, row_offsets, col_indices,
                 alias_prob, alias_col, xs, ys):
    """Draw ``len(xs)`` split-sample pairs; returns ``(x_ctr, y_ctr)``.

    X comes from its own stream, uniform on the nodes. Y consumes two draws
    of its stream per pair (alias slot, then coin) plus any rejections.
    """
    n_nodes = row_offsets.shape[0] - 1
    x_ctr = uniform_ints(x_key, x_ctr, n_nodes, xs)
    count = xs.shape[0]
    pos = 0
    while pos < count:
        x = xs[pos:]
        off = row_offsets[x]
        deg = (row_offsets[x + 1] - off).astype(np.uint64)
        draws = _draw_block(y_key, y_ctr, 2 * (count - pos))
        kd, ud = draws[0::2], draws[1::2]
        hi, lo = _mul_hi_lo(kd, deg)
        bad = np.flatnonzero(lo < _rejection_threshold(deg))
        stop = count - pos if bad.size == 0 else int(bad[0])
        slot = off[:stop] + hi[:stop].astype(np.int64)
        u = (ud[:stop] >> _U(11)).astype(np.float64) * _TWO_M53
        ys[pos:pos + stop] = np.where(u < alias_prob[slot], col_indices[slot], alias_col[slot])
        pos += stop
        y_ctr += 2 * stop
        if bad.size:
            ys[pos], y_ctr = _y_scalar(y_key, y_ctr, int(xs[pos]), row_offsets,
                                       col_indices, alias_prob, alias_col)
            pos += 1
    return x_ctr, y_ctr


def apply_steps(z, steps, c, m, xs, ys):
    """Apply ``len(steps)`` updates to ``z`` in place from pre-drawn pairs.

    ``xs``/``ys`` hold ``m`` pairs per step, in step order.
    """
    zl = z.tolist()
    xl = xs.tolist()
    yl = ys.tolist()
    c = float(c)
    if m == 1:
        for a, x, y in zip(steps.tolist(), xl, yl):
            zx = zl[x]
            if x == y:
                zl[x] = zx + a * ((1.0 - zx) + c * zx)
            else:
                zl[x] = zx + a * (1.0 - zx)
                zl[y] = zl[y] + a * (c * zx)
    else:
        j = 0
        for a in steps.tolist():
            bx = xl[j:j + m]
            by = yl[j:j + m]
            j += m
            yterm: dict[int, float] = {}
            for x, y in zip(bx, by):
                yterm[y] = yterm.get(y, 0.0) + c * zl[x]
            xset = set(bx)
            for i in xset | yterm.keys():
                zi = zl[i]
                xt = (1.0 - zi) if i in xset else 0.0
                zl[i] = zi + a * (xt + yterm.get(i, 0.0))
    z[:] = zl


def run_steps(z, steps, c, m, x_key, x_ctr, y_key, y_ctr,
              row_offsets, col_indices, alias_prob, alias_col):
    """Draw and apply ``len(steps)`` iterations; returns ``(x_ctr, y_ctr)``."""
    count = steps.shape[0] * m
    xs = np.empty(count, dtype=np.int64)
    ys = np.empty(count, dtype=np.int64)
    x_ctr, y_ctr = sample_pairs(x_key, x_ctr, y_key, y_ctr, row_offsets,
                                col_indices, alias_prob, alias_col, xs, ys)
    apply_steps(z, steps, c, m, xs, ys)
    return x_ctr, y_ctr
