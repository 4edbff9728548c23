# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Must agree bit for bit with ``_kernels_py``."""
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport calloc, malloc, free

BACKEND = "cython"

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t rl_mix64(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static inline uint64_t rl_draw(uint64_t key, uint64_t ctr) {
        return rl_mix64(key + (ctr + 1) * 0x9e3779b97f4a7c15ULL);
    }
    static inline uint64_t rl_bounded(uint64_t key, uint64_t *ctr, uint64_t n) {
        uint64_t r = rl_draw(key, (*ctr)++);
        __uint128_t m = (__uint128_t)r * n;
        uint64_t low = (uint64_t)m;
        if (low < n) {
            uint64_t t = (0 - n) % n;
            while (low < t) {
                r = rl_draw(key, (*ctr)++);
                m = (__uint128_t)r * n;
                low = (uint64_t)m;
            }
        }
        return (uint64_t)(m >> 64);
    }
    static inline double rl_unit(uint64_t key, uint64_t *ctr) {
        return (double)(rl_draw(key, (*ctr)++) >> 11) * 0x1.0p-53;
    }
    """
    uint64_t rl_mix64(uint64_t z) nogil
    uint64_t rl_draw(uint64_t key, uint64_t ctr) nogil
    uint64_t rl_bounded(uint64_t key, uint64_t *ctr, uint64_t n) nogil
    double rl_unit(uint64_t key, uint64_t *ctr) nogil


cdef inline int64_t _draw_y(uint64_t key, uint64_t *ctr, int64_t x,
                            const int64_t[::1] row_offsets,
                            const int64_t[::1] col_indices,
                            const double[::1] alias_prob,
                            const int64_t[::1] alias_col) noexcept nogil:
    cdef int64_t off = row_offsets[x]
    cdef uint64_t d = <uint64_t>(row_offsets[x + 1] - off)
    cdef int64_t slot = off + <int64_t>rl_bounded(key, ctr, d)
    cdef double u = rl_unit(key, ctr)
    if u < alias_prob[slot]:
        return col_indices[slot]
    return alias_col[slot]


def mix64(uint64_t z):
    return rl_mix64(z)


def draw64(uint64_t key, uint64_t ctr):
    return rl_draw(key, ctr)


def bounded(uint64_t key, uint64_t ctr, uint64_t n):
    cdef uint64_t v = rl_bounded(key, &ctr, n)
    return v, ctr


def unit(uint64_t key, uint64_t ctr):
    cdef double u = rl_unit(key, &ctr)
    return u, ctr


def uniform_ints(uint64_t key, uint64_t ctr, uint64_t bound, int64_t[::1] out):
    cdef Py_ssize_t i
    with nogil:
        for i in range(out.shape[0]):
            out[i] = <int64_t>rl_bounded(key, &ctr, bound)
    return ctr


def sample_pairs(uint64_t x_key, uint64_t x_ctr, uint64_t y_key, uint64_t y_ctr,
                 const int64_t[::1] row_offsets, const int64_t[::1] col_indices,
                 const double[::1] alias_prob, const int64_t[::1] alias_col,
                 int64_t[::1] xs, int64_t[::1] ys):
    cdef uint64_t n_nodes = <uint64_t>(row_offsets.shape[0] - 1)
    cdef Py_ssize_t i
    cdef int64_t x
    with nogil:
        for i in range(xs.shape[0]):
            x = <int64_t>rl_bounded(x_key, &x_ctr, n_nodes)
            xs[i] = x
            ys[i] = _draw_y(y_key, &y_ctr, x, row_offsets, col_indices,
                            alias_prob, alias_col)
    return x_ctr, y_ctr


cdef void _apply_batch(double *z, double a, double c, Py_ssize_t m,
                       const int64_t *bx, const int64_t *by, double *xz,
                       double *yterm, char *flags) noexcept nogil:
    # flags: bit 1 = in x-set, bit 2 = touched, bit 4 = already written
    cdef Py_ssize_t j
    cdef int64_t i
    cdef double zi, xt
    for j in range(m):
        xz[j] = z[bx[j]]
    for j in range(m):
        i = by[j]
        yterm[i] += c * xz[j]
        flags[i] |= 2
        flags[bx[j]] |= 3
    for j in range(2 * m):
        i = bx[j] if j < m else by[j - m]
        if flags[i] & 4:
            continue
        zi = z[i]
        xt = (1.0 - zi) if (flags[i] & 1) else 0.0
        z[i] = zi + a * (xt + yterm[i])
        flags[i] |= 4
    for j in range(2 * m):
        i = bx[j] if j < m else by[j - m]
        flags[i] = 0
        yterm[i] = 0.0


def apply_steps(double[::1] z, const double[::1] steps, double c, Py_ssize_t m,
                const int64_t[::1] xs, const int64_t[::1] ys):
    cdef Py_ssize_t n_steps = steps.shape[0]
    cdef Py_ssize_t s
    cdef int64_t x, y
    cdef double a, zx
    cdef double *yterm
    cdef double *xz
    cdef char *flags
    if xs.shape[0] < n_steps * m or ys.shape[0] < n_steps * m:
        raise ValueError("not enough samples for the requested steps")
    if m == 1:
        with nogil:
            for s in range(n_steps):
                a = steps[s]
                x = xs[s]
                y = ys[s]
                zx = z[x]
                if x == y:
                    z[x] = zx + a * ((1.0 - zx) + c * zx)
                else:
                    z[x] = zx + a * (1.0 - zx)
                    z[y] = z[y] + a * (c * zx)
        return
    yterm = <double *>calloc(z.shape[0], sizeof(double))
    flags = <char *>calloc(z.shape[0], sizeof(char))
    xz = <double *>malloc(m * sizeof(double))
    if yterm == NULL or flags == NULL or xz == NULL:
        free(yterm); free(flags); free(xz)
        raise MemoryError()
    try:
        with nogil:
            for s in range(n_steps):
                _apply_batch(&z[0], steps[s], c, m, &xs[s * m], &ys[s * m],
                             xz, yterm, flags)
    finally:
        free(yterm); free(flags); free(xz)


def run_steps(double[::1] z, const double[::1] steps, double c, Py_ssize_t m,
              uint64_t x_key, uint64_t x_ctr, uint64_t y_key, uint64_t y_ctr,
              const int64_t[::1] row_offsets, const int64_t[::1] col_indices,
              const double[::1] alias_prob, const int64_t[::1] alias_col):
    cdef Py_ssize_t n_steps = steps.shape[0]
    cdef uint64_t n_nodes = <uint64_t>(row_offsets.shape[0] - 1)
    cdef Py_ssize_t s, j
    cdef int64_t x, y
    cdef double a, zx
    cdef double *yterm
    cdef double *xz
    cdef char *flags
    cdef int64_t *bx
    cdef int64_t *by
    if <uint64_t>z.shape[0] != n_nodes:
        raise ValueError("state dimension does not match the model")
    if m == 1:
        with nogil:
            for s in range(n_steps):
                a = steps[s]
                x = <int64_t>rl_bounded(x_key, &x_ctr, n_nodes)
                y = _draw_y(y_key, &y_ctr, x, row_offsets, col_indices,
                            alias_prob, alias_col)
                zx = z[x]
                if x == y:
                    z[x] = zx + a * ((1.0 - zx) + c * zx)
                else:
                    z[x] = zx + a * (1.0 - zx)
                    z[y] = z[y] + a * (c * zx)
        return x_ctr, y_ctr
    yterm = <double *>calloc(n_nodes, sizeof(double))
    flags = <char *>calloc(n_nodes, sizeof(char))
    xz = <double *>malloc(m * sizeof(double))
    bx = <int64_t *>malloc(m * sizeof(int64_t))
    by = <int64_t *>malloc(m * sizeof(int64_t))
    if yterm == NULL or flags == NULL or xz == NULL or bx == NULL or by == NULL:
        free(yterm); free(flags); free(xz); free(bx); free(by)
        raise MemoryError()
    try:
        with nogil:
            for s in range(n_steps):
                for j in range(m):
                    x = <int64_t>rl_bounded(x_key, &x_ctr, n_nodes)
                    bx[j] = x
                    by[j] = _draw_y(y_key, &y_ctr, x, row_offsets, col_indices,
                                    alias_prob, alias_col)
                _apply_batch(&z[0], steps[s], c, m, bx, by, xz, yterm, flags)
    finally:
        free(yterm); free(flags); free(xz); free(bx); free(by)
    return x_ctr, y_ctr
