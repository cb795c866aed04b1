"""Half-space direction sets for 2D and 3D line probes."""

from __future__ import annotations

import math

import numpy as np

GOLDEN_FRACTION = (math.sqrt(5.0) - 1.0) / 2.0

DEFAULT_K_2D = 36
DEFAULT_K_3D = 96


class DirectionSet:
    """Ordered set of unit vectors covering a half-space once.

    Vectors are stored as a ``(K, 3)`` float64 array; 2D directions have a
    zero z-component.

    Parameters
    ----------
    vectors : array_like of shape (K, 3)
    dim : {2, 3}
    """

    def __init__(self, vectors, dim: int):
        v = np.ascontiguousarray(vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 1:
            raise ValueError(f"vectors must have shape (K, 3), got {v.shape}")
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("direction vectors must have unit norm")
        if dim == 2 and np.any(v[:, 2] != 0.0):
            raise ValueError("2D direction sets must have zero z-components")
        if not np.all(_in_canonical_half_space(v)):
            raise ValueError("direction vectors must lie in the canonical half-space")
        # antipodes cannot both be in the canonical half-space, so only
        # near-duplicates need checking
        if v.shape[0] > 1:
            dots = v @ v.T
            np.fill_diagonal(dots, 0.0)
            if np.any(np.abs(dots) >= math.cos(1e-6)):
                raise ValueError("direction set contains duplicate or antipodal vectors")
        v.setflags(write=False)
        self.vectors = v
        self.dim = dim

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    def __len__(self):
        return self.count

    def __getitem__(self, idx):
        return self.vectors[idx]

    def __iter__(self):
        return iter(self.vectors)

    def __repr__(self):
        return f"DirectionSet(dim={self.dim}, count={self.count})"


def _in_canonical_half_space(v):
    x, y, z = v[:, 0], v[:, 1], v[:, 2]
    return (z > 0) | ((z == 0) & (y > 0)) | ((z == 0) & (y == 0) & (x > 0))


def directions_2d(K: int) -> DirectionSet:
    """``K`` in-plane directions at angles ``k*pi/K``, ``k = 0..K-1``."""
    K = int(K)
    if K < 2:
        raise ValueError(f"2D direction sets need K >= 2, got {K}")
    theta = np.arange(K) * (math.pi / K)
    v = np.stack([np.cos(theta), np.sin(theta), np.zeros(K)], axis=1)
    # cos(pi/2) is ~6e-17, not 0; keep exact axis vectors exact
    v[np.abs(v) < 1e-15] = 0.0
    return DirectionSet(v, dim=2)


def directions_3d(K: int) -> DirectionSet:
    """``K`` directions on a spherical Fibonacci lattice over the upper hemisphere.

    For ``k = 0..K-1``: ``z = (k + 0.5) / K`` and azimuth
    ``phi = 2*pi*k*g`` with ``g = (sqrt(5) - 1) / 2``.
    """
    K = int(K)
    if K < 3:
        raise ValueError(f"3D direction sets need K >= 3, got {K}")
    k = np.arange(K, dtype=np.float64)
    z = (k + 0.5) / K
    phi = 2.0 * math.pi * k * GOLDEN_FRACTION
    r = np.sqrt(1.0 - z * z)
    v = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    return DirectionSet(v, dim=3)


def directions_for(ndim: int, K: int | None = None) -> DirectionSet:
    """Default direction set for a volume of effective dimensionality ``ndim``."""
    if ndim == 2:
        return directions_2d(DEFAULT_K_2D if K is None else K)
    return directions_3d(DEFAULT_K_3D if K is None else K)


def coverage_angle(dirs: DirectionSet, probes) -> float:
    """Largest axial angle (radians) from any probe direction to its nearest set member."""
    probes = np.asarray(probes, dtype=np.float64)
    probes = probes / np.linalg.norm(probes, axis=1, keepdims=True)
    cos = np.abs(probes @ dirs.vectors.T).max(axis=1)
    return float(np.arccos(np.clip(cos, -1.0, 1.0)).max())
