"""Compiled inner loops shared by the field and maximal-operator engines.

Grid coordinates used throughout: for a domain with origin ``(x0, y0)`` and
cell side ``h`` the point ``(x, y)`` has grid coordinates
``gx = (x - x0) / h - 0.5``, ``gy = (y - y0) / h - 0.5`` so that cell
``(i, j)`` has its center at ``(i, j)``.
"""

import numba
import numpy as np

# The bundled TBB is too old for numba; OpenMP avoids the import-time warning.
if numba.config.THREADING_LAYER == "default":
    numba.config.THREADING_LAYER = "omp"


@numba.njit(cache=True, inline="always")
def bilinear(vals, gx, gy):
    """Bilinear interpolation of cell-centered values.

    Points inside the window but within half a cell of its edge are clamped
    to the outermost cell centers; points outside the window evaluate to 0.
    """
    nx, ny = vals.shape
    if gx < -0.5 or gy < -0.5 or gx > nx - 0.5 or gy > ny - 0.5:
        return 0.0
    if gx < 0.0:
        gx = 0.0
    elif gx > nx - 1.0:
        gx = nx - 1.0
    if gy < 0.0:
        gy = 0.0
    elif gy > ny - 1.0:
        gy = ny - 1.0
    i = int(gx)
    j = int(gy)
    if i > nx - 2:
        i = max(nx - 2, 0)
    if j > ny - 2:
        j = max(ny - 2, 0)
    tx = gx - i
    ty = gy - j
    i1 = min(i + 1, nx - 1)
    j1 = min(j + 1, ny - 1)
    return (1.0 - tx) * ((1.0 - ty) * vals[i, j] + ty * vals[i, j1]) + tx * (
        (1.0 - ty) * vals[i1, j] + ty * vals[i1, j1]
    )


@numba.njit(cache=True, parallel=True)
def rect_average_batch(vals, gcx, gcy, dgx, dgy, out):
    """Mean of the interpolant over a shared sample lattice, one row per center."""
    ns = dgx.size
    for r in numba.prange(gcx.size):
        cx = gcx[r]
        cy = gcy[r]
        acc = 0.0
        for k in range(ns):
            acc += bilinear(vals, cx + dgx[k], cy + dgy[k])
        out[r] = acc / ns


@numba.njit(cache=True)
def resample(vals, gx, gy, out):
    for r in range(gx.size):
        out[r] = bilinear(vals, gx[r], gy[r])


@numba.njit(cache=True, inline="always")
def offset_inside(di, dj, hc, hs, half_l, half_w):
    """Containment of the cell offset ``(di, dj)`` in a centered rotated rectangle.

    ``hc = h cos(theta)``, ``hs = h sin(theta)``; ``half_l`` and ``half_w``
    already include the containment tolerance band.
    """
    u = di * hc + dj * hs
    v = dj * hc - di * hs
    return abs(u) <= half_l and abs(v) <= half_w


@numba.njit(cache=True)
def footprint_offsets(hc, hs, half_l, half_w, rad_i, rad_j):
    buf = np.empty(((2 * rad_i + 1) * (2 * rad_j + 1), 2), dtype=np.int64)
    n = 0
    for di in range(-rad_i, rad_i + 1):
        for dj in range(-rad_j, rad_j + 1):
            if offset_inside(di, dj, hc, hs, half_l, half_w):
                buf[n, 0] = di
                buf[n, 1] = dj
                n += 1
    return buf[:n].copy()


@numba.njit(cache=True, parallel=True)
def oracle_max(avg, hc, hs, half_l, half_w, out):
    """Direct enumeration: every cell against every rectangle center."""
    nx, ny = avg.shape
    for ix in numba.prange(nx):
        for jx in range(ny):
            best = out[ix, jx]
            for ic in range(nx):
                di = ix - ic
                for jc in range(ny):
                    if offset_inside(di, jx - jc, hc, hs, half_l, half_w):
                        a = avg[ic, jc]
                        if a > best:
                            best = a
            out[ix, jx] = best


@numba.njit(cache=True)
def scatter_max(avg, offsets, out):
    """Push each rectangle's average to the cells it can contain."""
    nx, ny = avg.shape
    for ic in range(nx):
        for jc in range(ny):
            a = avg[ic, jc]
            for k in range(offsets.shape[0]):
                ix = ic + offsets[k, 0]
                jx = jc + offsets[k, 1]
                if 0 <= ix < nx and 0 <= jx < ny and a > out[ix, jx]:
                    out[ix, jx] = a


@numba.njit(cache=True)
def pair_sup(q, di, dj, w):
    """Max over listed offsets of ``w[k] * max |q(x + d_k) - q(x)|``.

    Returns the value and the witnessing pair as cell indices
    ``(i, j, i + di, j + dj)``.
    """
    nx, ny = q.shape
    best = 0.0
    arg = np.full(4, -1, dtype=np.int64)
    for k in range(di.size):
        a = di[k]
        b = dj[k]
        wk = w[k]
        i_lo = max(0, -a)
        i_hi = min(nx, nx - a)
        j_lo = max(0, -b)
        j_hi = min(ny, ny - b)
        for i in range(i_lo, i_hi):
            for j in range(j_lo, j_hi):
                val = wk * abs(q[i + a, j + b] - q[i, j])
                if val > best:
                    best = val
                    arg[0] = i
                    arg[1] = j
                    arg[2] = i + a
                    arg[3] = j + b
    return best, arg
