"""
Compiled voxel kernels.

Every per-voxel reduction runs in a fixed order (samples paired
symmetrically about the centre, then directions by index), so results do
not depend on the number of worker threads. Accumulation is float64,
storage float32.
"""

import math
import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # skip probing an outdated system TBB
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@njit(cache=True, inline="always")
def _at(data, k, j, i):
    nz, ny, nx = data.shape
    if i < 0 or j < 0 or k < 0 or i >= nx or j >= ny or k >= nz:
        return 0.0
    return np.float64(data[k, j, i])


@njit(cache=True)
def trilinear(data, x, y, z):
    # lerp form a + t*(b - a) keeps constants exact
    fi = math.floor(x)
    fj = math.floor(y)
    fk = math.floor(z)
    tx = x - fi
    ty = y - fj
    tz = z - fk
    i = int(fi)
    j = int(fj)
    k = int(fk)
    nz, ny, nx = data.shape
    if i < -1 or j < -1 or k < -1 or i >= nx or j >= ny or k >= nz:
        return 0.0
    c000 = _at(data, k, j, i)
    c100 = _at(data, k, j, i + 1)
    c010 = _at(data, k, j + 1, i)
    c110 = _at(data, k, j + 1, i + 1)
    c001 = _at(data, k + 1, j, i)
    c101 = _at(data, k + 1, j, i + 1)
    c011 = _at(data, k + 1, j + 1, i)
    c111 = _at(data, k + 1, j + 1, i + 1)
    c00 = c000 + tx * (c100 - c000)
    c10 = c010 + tx * (c110 - c010)
    c01 = c001 + tx * (c101 - c001)
    c11 = c011 + tx * (c111 - c011)
    c0 = c00 + ty * (c10 - c00)
    c1 = c01 + ty * (c11 - c01)
    return c0 + tz * (c1 - c0)


@njit(cache=True)
def nearest_index(nz, ny, nx, x, y, z):
    """Flat index of the nearest voxel centre (ties to lower index), -1 outside."""
    i = math.ceil(x - 0.5)
    j = math.ceil(y - 0.5)
    k = math.ceil(z - 0.5)
    if i < 0 or j < 0 or k < 0 or i >= nx or j >= ny or k >= nz:
        return -1
    return (int(k) * ny + int(j)) * nx + int(i)


@njit(cache=True)
def line_integral_point(data, x, y, z, bx, by, bz, m, h):
    total = 0.0
    half = 0.5 * m
    for q in range(m // 2):
        s = (q + 0.5 - half) * h
        a = trilinear(data, x + s * bx, y + s * by, z + s * bz)
        s = -s
        b = trilinear(data, x + s * bx, y + s * by, z + s * bz)
        total += a + b
    if m % 2 == 1:
        total += trilinear(data, x, y, z)
    return total * h


@njit(cache=True, inline="always")
def _align_sample(f1, f2flat, x, y, z, bx, by, bz):
    nz, ny, nx = f1.shape
    idx = nearest_index(nz, ny, nx, x, y, z)
    if idx < 0:
        return 0.0
    vx = np.float64(f2flat[idx, 0])
    vy = np.float64(f2flat[idx, 1])
    vz = np.float64(f2flat[idx, 2])
    if vx == 0.0 and vy == 0.0 and vz == 0.0:
        return 0.0
    d = vx * bx + vy * by + vz * bz
    return trilinear(f1, x, y, z) * (2.0 * d * d - 1.0)


@njit(cache=True)
def alignment_integral_point(f1, f2flat, x, y, z, bx, by, bz, m, h):
    total = 0.0
    half = 0.5 * m
    for q in range(m // 2):
        s = (q + 0.5 - half) * h
        a = _align_sample(f1, f2flat, x + s * bx, y + s * by, z + s * bz, bx, by, bz)
        s = -s
        b = _align_sample(f1, f2flat, x + s * bx, y + s * by, z + s * bz, bx, by, bz)
        total += a + b
    if m % 2 == 1:
        total += _align_sample(f1, f2flat, x, y, z, bx, by, bz)
    return total * h


@njit(cache=True, inline="always")
def _reduce(prof):
    K = prof.shape[0]
    best = 0
    vmax = prof[0]
    vmin = prof[0]
    acc = 0.0
    for d in range(K):
        v = prof[d]
        if v > vmax:
            vmax = v
            best = d
        if v < vmin:
            vmin = v
        acc += v
    mean = acc / K
    dev = 0.0
    for d in range(K):
        dev += abs(mean - prof[d])
    return vmax, vmin, best, mean, dev / K


@njit(cache=True, parallel=True)
def line_sweep(data, dirs, m, h):
    """Max / mean / mean-abs-deviation of line integrals plus argmax direction."""
    nz, ny, nx = data.shape
    K = dirs.shape[0]
    w1 = np.empty((nz, ny, nx), dtype=np.float32)
    w3 = np.empty((nz, ny, nx), dtype=np.float32)
    w5 = np.empty((nz, ny, nx), dtype=np.float32)
    f2 = np.empty((nz, ny, nx, 3), dtype=np.float32)
    for row in prange(nz * ny):
        k = row // ny
        j = row % ny
        prof = np.empty(K, dtype=np.float64)
        for i in range(nx):
            for d in range(K):
                prof[d] = line_integral_point(
                    data, float(i), float(j), float(k), dirs[d, 0], dirs[d, 1], dirs[d, 2], m, h
                )
            vmax, vmin, best, mean, dev = _reduce(prof)
            w1[k, j, i] = vmax
            w3[k, j, i] = mean
            w5[k, j, i] = dev
            if vmax == 0.0 and vmin == 0.0:
                f2[k, j, i, 0] = 0.0
                f2[k, j, i, 1] = 0.0
                f2[k, j, i, 2] = 0.0
            else:
                f2[k, j, i, 0] = dirs[best, 0]
                f2[k, j, i, 1] = dirs[best, 1]
                f2[k, j, i, 2] = dirs[best, 2]
    return w1, w3, w5, f2


@njit(cache=True, parallel=True)
def alignment_sweep(f1, f2, dirs, m, h):
    """Max / mean / mean-abs-deviation of alignment integrals."""
    nz, ny, nx = f1.shape
    K = dirs.shape[0]
    f2flat = f2.reshape((nz * ny * nx, 3))
    w2 = np.empty((nz, ny, nx), dtype=np.float32)
    w4 = np.empty((nz, ny, nx), dtype=np.float32)
    w6 = np.empty((nz, ny, nx), dtype=np.float32)
    for row in prange(nz * ny):
        k = row // ny
        j = row % ny
        prof = np.empty(K, dtype=np.float64)
        for i in range(nx):
            for d in range(K):
                prof[d] = alignment_integral_point(
                    f1, f2flat, float(i), float(j), float(k), dirs[d, 0], dirs[d, 1], dirs[d, 2], m, h
                )
            vmax, vmin, best, mean, dev = _reduce(prof)
            w2[k, j, i] = vmax
            w4[k, j, i] = mean
            w6[k, j, i] = dev
    return w2, w4, w6


@njit(cache=True, parallel=True)
def combine_product(stack, use):
    """Product of the selected measures, each clamped below at zero."""
    n, nz, ny, nx = stack.shape
    out = np.empty((nz, ny, nx), dtype=np.float32)
    for row in prange(nz * ny):
        k = row // ny
        j = row % ny
        for i in range(nx):
            acc = 1.0
            for q in range(n):
                if use[q]:
                    v = np.float64(stack[q, k, j, i])
                    if v < 0.0:
                        v = 0.0
                    acc *= v
            out[k, j, i] = acc
    return out
