"""
Slow reference evaluators for the test suite.

These follow the integral definitions directly with vectorised numpy and
``scipy.ndimage.map_coordinates`` for interpolation, sharing no code with
the compiled kernels. Same discretisation: midpoint rule, zero padding,
nearest-voxel directions, lowest-index argmax, float32 storage of the
orientation field between the two sweeps.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

MAX_VOXELS = 32**3
MAX_DIRECTIONS = 48


def _offsets(epsilon, step_hint=1.0):
    m = int(np.ceil(epsilon / step_hint))
    h = epsilon / m
    return (np.arange(m) + 0.5 - m / 2.0) * h, h


def _interp(data, pts):
    """Trilinear, zero outside. ``pts`` is ``(N, 3)`` in (x, y, z) order."""
    coords = pts[:, ::-1].T
    return ndimage.map_coordinates(
        np.asarray(data, dtype=np.float64), coords, order=1, mode="grid-constant", cval=0.0
    )


def _nearest(f2, pts):
    nz, ny, nx = f2.shape[:3]
    idx = np.ceil(pts - 0.5).astype(np.int64)
    inside = (
        (idx[:, 0] >= 0) & (idx[:, 0] < nx)
        & (idx[:, 1] >= 0) & (idx[:, 1] < ny)
        & (idx[:, 2] >= 0) & (idx[:, 2] < nz)
    )
    out = np.zeros((pts.shape[0], 3))
    ii = idx[inside]
    out[inside] = f2[ii[:, 2], ii[:, 1], ii[:, 0]]
    return out


def _check_small(data, dirs):
    if data.size > MAX_VOXELS or len(dirs) > MAX_DIRECTIONS:
        raise ValueError("reference evaluators are limited to 32^3 voxels and 48 directions")


def _grid_points(shape):
    nz, ny, nx = shape
    k, j, i = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    return np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1).astype(np.float64)


def ref_line_integral(data, x, b, epsilon, step_hint=1.0):
    data = np.asarray(data)
    if data.ndim == 2:
        data = data[None]
    s, h = _offsets(epsilon, step_hint)
    pts = np.asarray(x, float)[None, :] + s[:, None] * np.asarray(b, float)[None, :]
    return float(_interp(data, pts).sum() * h)


def ref_alignment_integral(f1, f2, x, b, epsilon, step_hint=1.0):
    s, h = _offsets(epsilon, step_hint)
    b = np.asarray(b, float)
    pts = np.asarray(x, float)[None, :] + s[:, None] * b[None, :]
    v = _nearest(np.asarray(f2, np.float64), pts)
    dot = v @ b
    factor = np.where(np.any(v != 0, axis=1), 2.0 * dot**2 - 1.0, 0.0)
    return float((_interp(f1, pts) * factor).sum() * h)


def ref_line_profiles(data, dirs, epsilon, step_hint=1.0):
    """``(K, nz, ny, nx)`` array of line integrals for every voxel and direction."""
    data = np.asarray(data)
    if data.ndim == 2:
        data = data[None]
    dirs = np.asarray(dirs, float)
    _check_small(data, dirs)
    s, h = _offsets(epsilon, step_hint)
    grid = _grid_points(data.shape)
    prof = np.zeros((len(dirs), grid.shape[0]))
    for d, b in enumerate(dirs):
        for sk in s:
            prof[d] += _interp(data, grid + sk * b)
    return (prof * h).reshape((len(dirs),) + data.shape)


def ref_orientation_field(data, dirs, epsilon, step_hint=1.0):
    """Returns ``(strength, direction)`` as float32 arrays."""
    dirs = np.asarray(dirs, float)
    prof = ref_line_profiles(data, dirs, epsilon, step_hint)
    best = np.argmax(prof, axis=0)
    strength = prof.max(axis=0).astype(np.float32)
    direction = dirs[best].astype(np.float32)
    all_zero = np.all(prof == 0.0, axis=0)
    direction[all_zero] = 0.0
    return strength, direction


def ref_alignment_profiles(f1, f2, dirs, epsilon, step_hint=1.0):
    dirs = np.asarray(dirs, float)
    _check_small(f1, dirs)
    s, h = _offsets(epsilon, step_hint)
    grid = _grid_points(f1.shape)
    f2 = np.asarray(f2, np.float64)
    prof = np.zeros((len(dirs), grid.shape[0]))
    for d, b in enumerate(dirs):
        for sk in s:
            pts = grid + sk * b
            v = _nearest(f2, pts)
            dot = v @ b
            factor = np.where(np.any(v != 0, axis=1), 2.0 * dot**2 - 1.0, 0.0)
            prof[d] += _interp(f1, pts) * factor
    return (prof * h).reshape((len(dirs),) + f1.shape)


def _max_mean_dev(prof):
    mean = prof.mean(axis=0)
    dev = np.abs(mean[None] - prof).mean(axis=0)
    return prof.max(axis=0), mean, dev


def ref_measures(data, dirs, epsilon, step_hint=1.0):
    """Dict of the six measures (float64 arrays) plus ``strength``/``direction``."""
    dirs = np.asarray(dirs, float)
    data = np.asarray(data)
    if data.ndim == 2:
        data = data[None]
    lp = ref_line_profiles(data, dirs, epsilon, step_hint)
    w1, w3, w5 = _max_mean_dev(lp)
    strength = w1.astype(np.float32)
    direction = dirs[np.argmax(lp, axis=0)].astype(np.float32)
    direction[np.all(lp == 0.0, axis=0)] = 0.0
    ap = ref_alignment_profiles(strength, direction, dirs, epsilon, step_hint)
    w2, w4, w6 = _max_mean_dev(ap)
    return {
        "w1": w1, "w2": w2, "w3": w3, "w4": w4, "w5": w5, "w6": w6,
        "strength": strength, "direction": direction,
    }


def ref_combine(measures, factors):
    out = np.ones_like(measures["w1"], dtype=np.float64)
    for i in factors:
        out = out * np.maximum(measures[f"w{i}"], 0.0)
    return out
