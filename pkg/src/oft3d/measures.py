"""The six per-voxel measures of the line and alignment integral profiles."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from oft3d import _kernels
from oft3d.directions import DirectionSet
from oft3d.integrals import IntegralParams, OrientationField, _check_dirs
from oft3d.volume import VectorField, Volume


@dataclass(frozen=True)
class MeasureStack:
    """Six measure volumes.

    ``w1``, ``w3``, ``w5`` are the max, mean and mean absolute deviation of
    the line-integral profile; ``w2``, ``w4``, ``w6`` the same for the
    alignment-integral profile.
    """

    w1: Volume
    w2: Volume
    w3: Volume
    w4: Volume
    w5: Volume
    w6: Volume

    def __post_init__(self):
        dims = {v.dims for v in self}
        if len(dims) != 1:
            raise ValueError(f"measure volumes disagree on dims: {sorted(dims)}")

    def __iter__(self):
        return (getattr(self, f.name) for f in fields(self))

    @property
    def dims(self):
        return self.w1.dims

    def as_array(self) -> np.ndarray:
        """Stack as ``(6, nz, ny, nx)`` float32, in w1..w6 order."""
        return np.stack([v.data for v in self])

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


def line_measures(vol: Volume, dirs: DirectionSet, p: IntegralParams):
    """Single sweep of line integrals.

    Returns
    -------
    w1, w3, w5 : Volume
        Max, mean and mean absolute deviation over ``dirs``.
    field : OrientationField
        ``w1`` together with the argmax direction.
    """
    _check_dirs(vol.dims, dirs)
    w1, w3, w5, f2 = _kernels.line_sweep(vol.data, dirs.vectors, p.n_samples, p.spacing)
    w1 = Volume(w1)
    return w1, Volume(w3), Volume(w5), OrientationField(w1, VectorField(f2))


def alignment_measures(field: OrientationField, dirs: DirectionSet, p: IntegralParams):
    """Max, mean and mean absolute deviation of the alignment integrals over ``dirs``."""
    _check_dirs(field.dims, dirs)
    w2, w4, w6 = _kernels.alignment_sweep(
        field.strength.data, field.direction.data, dirs.vectors, p.n_samples, p.spacing
    )
    return Volume(w2), Volume(w4), Volume(w6)


def compute_measures(vol: Volume, dirs: DirectionSet, p: IntegralParams):
    """Both sweeps; returns ``(MeasureStack, OrientationField)``."""
    w1, w3, w5, field = line_measures(vol, dirs, p)
    w2, w4, w6 = alignment_measures(field, dirs, p)
    return MeasureStack(w1, w2, w3, w4, w5, w6), field
