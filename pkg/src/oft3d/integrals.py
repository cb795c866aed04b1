"""
Line integrals, the primary orientation field and alignment integrals.

Both integrals use the midpoint rule on ``m = ceil(epsilon / step)``
samples spaced ``h = epsilon / m`` apart along a segment of length
``epsilon`` centred on the probe point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from oft3d import _kernels
from oft3d.directions import DirectionSet
from oft3d.volume import VectorField, Volume

UNIT_TOL = 1e-4


@dataclass(frozen=True)
class IntegralParams:
    """Path length ``epsilon`` and target sample spacing ``step_hint``, in voxels."""

    epsilon: float
    step_hint: float = 1.0

    def __post_init__(self):
        eps = float(self.epsilon)
        step = float(self.step_hint)
        if not (math.isfinite(eps) and eps > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not (math.isfinite(step) and step > 0):
            raise ValueError(f"step_hint must be positive, got {self.step_hint}")
        if eps / step > 1e6:
            raise ValueError("epsilon / step_hint exceeds 1e6 samples")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "step_hint", step)

    @property
    def n_samples(self) -> int:
        return max(1, math.ceil(self.epsilon / self.step_hint))

    @property
    def spacing(self) -> float:
        return self.epsilon / self.n_samples

    def offsets(self) -> np.ndarray:
        """Signed sample positions along the segment, in path order."""
        m, h = self.n_samples, self.spacing
        return (np.arange(m) + 0.5 - 0.5 * m) * h


@dataclass(frozen=True)
class OrientationField:
    """Best line-integral value (``strength``) and its direction per voxel."""

    strength: Volume
    direction: VectorField

    def __post_init__(self):
        if self.strength.dims != self.direction.dims:
            raise ValueError("strength and direction dims differ")

    @property
    def dims(self):
        return self.strength.dims


def _unit(b) -> tuple[float, float, float]:
    bx, by, bz = (float(c) for c in b)
    n = math.sqrt(bx * bx + by * by + bz * bz)
    if abs(n - 1.0) > UNIT_TOL:
        raise ValueError(f"direction must be a unit vector (|b| = {n:.6g})")
    return bx, by, bz


def _check_dirs(dims, dirs: DirectionSet):
    ndim = 2 if dims[2] == 1 else 3
    if dirs.dim != ndim:
        raise ValueError(
            f"direction set is {dirs.dim}D but the volume is {ndim}D (dims={tuple(dims)})"
        )


def line_integral(vol: Volume, x, b, p: IntegralParams) -> float:
    """Integral of ``vol`` along the length-``epsilon`` segment through ``x`` in direction ``b``."""
    bx, by, bz = _unit(b)
    x0, x1, x2 = (float(c) for c in x)
    return _kernels.line_integral_point(vol.data, x0, x1, x2, bx, by, bz, p.n_samples, p.spacing)


def alignment_integral(field: OrientationField, x, b, p: IntegralParams) -> float:
    """Integral of ``strength * (2 (direction . b)^2 - 1)`` along the segment through ``x``.

    Strength is interpolated trilinearly, direction taken from the nearest
    voxel; voxels with a zero direction contribute nothing.
    """
    bx, by, bz = _unit(b)
    x0, x1, x2 = (float(c) for c in x)
    f2 = field.direction.data
    f2flat = f2.reshape(-1, 3)
    return _kernels.alignment_integral_point(
        field.strength.data, f2flat, x0, x1, x2, bx, by, bz, p.n_samples, p.spacing
    )


def line_profile(vol: Volume, x, dirs: DirectionSet, p: IntegralParams) -> np.ndarray:
    """Line integrals at ``x`` for every direction of ``dirs``, in set order."""
    return np.array([line_integral(vol, x, b, p) for b in dirs.vectors])


def alignment_profile(field: OrientationField, x, dirs: DirectionSet, p: IntegralParams) -> np.ndarray:
    return np.array([alignment_integral(field, x, b, p) for b in dirs.vectors])


def orientation_field(vol: Volume, dirs: DirectionSet, p: IntegralParams) -> OrientationField:
    """Per-voxel maximum line integral and the first direction attaining it.

    Voxels whose profile is identically zero get a zero direction.
    """
    _check_dirs(vol.dims, dirs)
    w1, _, _, f2 = _kernels.line_sweep(vol.data, dirs.vectors, p.n_samples, p.spacing)
    return OrientationField(Volume(w1), VectorField(f2))
