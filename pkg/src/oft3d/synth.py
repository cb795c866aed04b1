"""
Synthetic ground-truthed test data.

The 3D volume is a closed tube along ``(sin t, cos t, cos 2t)``, scaled
and centred in the grid, among spherical clutter blobs, with additive
Gaussian noise. The 2D image is a perturbed circle among disc clutter.

Randomness comes from a Philox-4x64 counter generator keyed by
``(seed, stream)``; stream 0 places clutter and stream 1 drives the
noise. Uniforms take the top 53 bits of each raw 64-bit draw and
normal deviates use Box-Muller on consecutive pairs ``(u1, u2)``:
``sqrt(-2 ln(1 - u1)) * (cos 2 pi u2, sin 2 pi u2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from oft3d.volume import Volume

CLUTTER_STREAM = 0
NOISE_STREAM = 1


@dataclass(frozen=True)
class SynthParams:
    dims: tuple = (96, 96, 96)
    curve_amplitude: float | None = None
    curve_thickness: float = 3.0
    noise_sigma: float = 0.25
    clutter_density: float = 0.02
    clutter_radius: float = 1.0
    seed: int = 0

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) == 2:
            dims = dims + (1,)
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError(f"dims must be positive, got {self.dims}")
        object.__setattr__(self, "dims", dims)
        if self.curve_thickness < 1:
            raise ValueError("curve_thickness must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if not 0.0 <= self.clutter_density <= 0.5:
            raise ValueError("clutter_density must lie in [0, 0.5]")
        if self.clutter_radius <= 0:
            raise ValueError("clutter_radius must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def amplitude(self, ndim: int) -> float:
        if self.curve_amplitude is not None:
            return float(self.curve_amplitude)
        extent = min(self.dims[:ndim])
        return 0.35 * (extent - 1)


class CounterRNG:
    """Philox-backed uniform and normal draws in a fixed order."""

    def __init__(self, seed: int, stream: int):
        key = np.array([int(seed), int(stream)], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)

    def uniform(self, n: int) -> np.ndarray:
        raw = self._bitgen.random_raw(n)
        return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

    def normal(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        theta = 2.0 * math.pi * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = r * np.cos(theta)
        z[:, 1] = r * np.sin(theta)
        return z.ravel()[:n]


def _grid_centres(shape):
    nz, ny, nx = shape
    k, j, i = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    return np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1).astype(np.float64)


def _tube_mask(shape, curve_pts, radius):
    """Voxels whose centre lies within ``radius`` of the densely sampled curve."""
    tree = cKDTree(curve_pts)
    dist, _ = tree.query(_grid_centres(shape), distance_upper_bound=radius + 1e-9)
    return (dist <= radius).reshape(shape)


def _dense_curve(fn, length_hint, spacing=0.05):
    n = max(64, int(math.ceil(length_hint / spacing)))
    t = np.arange(n) * (2.0 * math.pi / n)
    return fn(t)


def _add_clutter(mask_shape, rng: CounterRNG, density, radius, planar):
    nz, ny, nx = mask_shape
    clutter = np.zeros(mask_shape, dtype=bool)
    if density <= 0:
        return clutter
    target = density * clutter.size
    reach = int(math.ceil(radius))
    offs = np.arange(-reach, reach + 1)
    covered = 0
    while covered < target:
        cx, cy, cz = rng.uniform(3)
        c = np.array([cx * nx, cy * ny, 0.0 if planar else cz * nz])
        base = np.floor(c).astype(int)
        kz = [0] if planar else offs
        for dk in kz:
            k = base[2] + dk
            if not 0 <= k < nz:
                continue
            for dj in offs:
                j = base[1] + dj
                if not 0 <= j < ny:
                    continue
                i = base[0] + offs
                i = i[(i >= 0) & (i < nx)]
                d2 = (i - c[0]) ** 2 + (j - c[1]) ** 2 + (k - c[2]) ** 2
                hit = i[d2 <= radius * radius]
                new = ~clutter[k, j, hit]
                covered += int(new.sum())
                clutter[k, j, hit] = True
    return clutter


def _finish(tube, clutter, p: SynthParams, rng_noise: CounterRNG):
    vol = np.maximum(tube, clutter).astype(np.float64)
    if p.noise_sigma > 0:
        vol += p.noise_sigma * rng_noise.normal(vol.size).reshape(vol.shape)
    return Volume(vol), Volume(tube.astype(np.float32)), Volume(clutter.astype(np.float32))


def make_curve_volume(p: SynthParams, return_clutter: bool = False):
    """Noisy 3D tube along ``(sin t, cos t, cos 2t)`` among spherical clutter.

    Returns
    -------
    vol, truth : Volume
        Image and binary tube mask; ``return_clutter`` appends the binary
        clutter mask.
    """
    nx, ny, nz = p.dims
    amp = p.amplitude(3)
    centre = np.array([(nx - 1) / 2.0, (ny - 1) / 2.0, (nz - 1) / 2.0])

    def fn(t):
        return centre + amp * np.stack([np.sin(t), np.cos(t), np.cos(2 * t)], axis=1)

    pts = _dense_curve(fn, 2.0 * math.pi * amp * 1.5)
    tube = _tube_mask((nz, ny, nx), pts, p.curve_thickness / 2.0)
    clutter = _add_clutter(
        (nz, ny, nx), CounterRNG(p.seed, CLUTTER_STREAM), p.clutter_density, p.clutter_radius, planar=False
    )
    vol, truth, clut = _finish(tube, clutter, p, CounterRNG(p.seed, NOISE_STREAM))
    return (vol, truth, clut) if return_clutter else (vol, truth)


def make_curve_image_2d(p: SynthParams, return_clutter: bool = False):
    """2D analogue: a circle with a five-fold sinusoidal radius perturbation among dots."""
    nx, ny = p.dims[0], p.dims[1]
    amp = p.amplitude(2)
    cx, cy = (nx - 1) / 2.0, (ny - 1) / 2.0

    def fn(t):
        r = amp * (1.0 + 0.15 * np.sin(5 * t))
        return np.stack([cx + r * np.cos(t), cy + r * np.sin(t), np.zeros_like(t)], axis=1)

    pts = _dense_curve(fn, 2.0 * math.pi * amp * 1.5)
    tube = _tube_mask((1, ny, nx), pts, p.curve_thickness / 2.0)
    clutter = _add_clutter(
        (1, ny, nx), CounterRNG(p.seed, CLUTTER_STREAM), p.clutter_density, p.clutter_radius, planar=True
    )
    vol, truth, clut = _finish(tube, clutter, p, CounterRNG(p.seed, NOISE_STREAM))
    return (vol, truth, clut) if return_clutter else (vol, truth)


def make_tube_volume(n: int, axis: str = "x", thickness: float = 3.0) -> Volume:
    """Straight unit-intensity tube through the centre of an ``n^3`` grid along one axis."""
    c = (n - 1) / 2.0
    idx = np.arange(n, dtype=np.float64)
    k, j, i = np.meshgrid(idx, idx, idx, indexing="ij")
    across = {"x": (j, k), "y": (i, k), "z": (i, j)}[axis]
    r2 = (across[0] - c) ** 2 + (across[1] - c) ** 2
    return Volume((r2 <= (thickness / 2.0) ** 2).astype(np.float32))


def make_dense_tubes(n: int = 40, spacing: float = 8.0, thickness: float = 3.0,
                     noise_sigma: float = 0.5, seed: int = 0):
    """Closely packed, non-touching lattice of x-, y- and z-tubes with noise.

    A stand-in for densely packed tubular networks. Returns ``(vol, truth)``.
    """
    idx = np.arange(n, dtype=np.float64)
    k, j, i = np.meshgrid(idx, idx, idx, indexing="ij")
    r2 = (thickness / 2.0) ** 2
    lo, hi = spacing / 4.0, 3.0 * spacing / 4.0

    def gap(a, centre):
        return (a - centre + spacing / 2.0) % spacing - spacing / 2.0

    x_tubes = gap(j, lo) ** 2 + gap(k, lo) ** 2 <= r2
    y_tubes = gap(i, hi) ** 2 + gap(k, hi) ** 2 <= r2
    z_tubes = gap(i, lo) ** 2 + gap(j, hi) ** 2 <= r2
    truth = x_tubes | y_tubes | z_tubes
    vol = truth.astype(np.float64)
    if noise_sigma > 0:
        vol += noise_sigma * CounterRNG(seed, NOISE_STREAM).normal(vol.size).reshape(vol.shape)
    return Volume(vol), Volume(truth.astype(np.float32))
