"""
Dense scalar and vector grids, continuous-coordinate sampling and file I/O.

Arrays are held z-major, i.e. ``data[k, j, i]`` is the voxel with index
``(i, j, k)``, which makes the C-order byte layout x-fastest. Voxel centres
sit at integer coordinates and reads outside the grid return zero.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from oft3d import _kernels


class VolumeFormatError(ValueError):
    """Raised when a volume file is missing, malformed or inconsistent."""


class Volume:
    """Dense 32-bit scalar grid.

    Parameters
    ----------
    data : array_like
        2D ``(ny, nx)`` image or 3D ``(nz, ny, nx)`` volume. A 2D input is
        stored with ``nz = 1``.
    """

    def __init__(self, data):
        arr = np.asarray(data)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3 or 0 in arr.shape:
            raise ValueError(f"expected a non-empty 2D or 3D array, got shape {arr.shape}")
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        if not np.all(np.isfinite(arr)):
            raise ValueError("volume contains non-finite values")
        self.data = arr

    @classmethod
    def zeros(cls, dims) -> "Volume":
        nx, ny, nz = _check_dims(dims)
        return cls(np.zeros((nz, ny, nx), dtype=np.float32))

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.data.shape
        return (nx, ny, nz)

    @property
    def ndim(self) -> int:
        """Effective dimensionality: 2 when ``nz == 1``, else 3."""
        return 2 if self.data.shape[0] == 1 else 3

    def __getitem__(self, ijk):
        i, j, k = ijk
        return float(self.data[k, j, i])

    def __eq__(self, other):
        if not isinstance(other, Volume):
            return NotImplemented
        return self.dims == other.dims and self.data.tobytes() == other.data.tobytes()

    def __repr__(self):
        return f"Volume(dims={self.dims})"

    def to_array(self, squeeze=True) -> np.ndarray:
        """Return the stored array, dropping the z axis of 2D images when ``squeeze``."""
        if squeeze and self.data.shape[0] == 1:
            return self.data[0]
        return self.data


class VectorField:
    """Per-voxel axial unit vectors, stored as ``(nz, ny, nx, 3)`` float32."""

    def __init__(self, data):
        arr = np.asarray(data)
        if arr.ndim == 3 and arr.shape[-1] == 3:
            arr = arr[np.newaxis]
        if arr.ndim != 4 or arr.shape[-1] != 3:
            raise ValueError(f"expected (nz, ny, nx, 3) array, got shape {arr.shape}")
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        if not np.all(np.isfinite(arr)):
            raise ValueError("vector field contains non-finite values")
        self.data = arr

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx, _ = self.data.shape
        return (nx, ny, nz)

    def __getitem__(self, ijk):
        i, j, k = ijk
        return tuple(float(c) for c in self.data[k, j, i])

    def __repr__(self):
        return f"VectorField(dims={self.dims})"


def _check_dims(dims) -> tuple[int, int, int]:
    dims = [int(d) for d in dims]
    if len(dims) == 2:
        dims.append(1)
    if len(dims) != 3 or min(dims) < 1:
        raise ValueError(f"dims must be a positive (nx, ny[, nz]) triple, got {dims}")
    return tuple(dims)


def sample_scalar(vol: Volume, p) -> float:
    """Trilinear interpolation at ``p = (x, y, z)`` with zero padding."""
    x, y, z = (float(c) for c in p)
    return _kernels.trilinear(vol.data, x, y, z)


def sample_vector_nearest(field: VectorField, p) -> tuple[float, float, float]:
    """Vector at the voxel nearest to ``p``; ties go to the lower index.

    Returns the zero vector when the rounded index falls outside the grid.
    """
    x, y, z = (float(c) for c in p)
    idx = _kernels.nearest_index(field.data.shape[0], field.data.shape[1], field.data.shape[2], x, y, z)
    if idx < 0:
        return (0.0, 0.0, 0.0)
    v = field.data.reshape(-1, 3)[idx]
    return (float(v[0]), float(v[1]), float(v[2]))


# --------------------------------------------------------------------------
# File I/O
# --------------------------------------------------------------------------

def _header_path(path) -> Path:
    path = Path(path)
    if path.suffix in (".json", ".raw"):
        path = path.with_suffix("")
    # append rather than replace, so "out.w1" stays distinct from "out"
    return path.with_name(path.name + ".json")


def write_volume(vol: Volume, path) -> tuple[Path, Path]:
    """Write ``<name>.json`` + ``<name>.raw``. ``path`` may carry either suffix or none."""
    header = _header_path(path)
    raw = header.with_suffix(".raw")
    header.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "dims": list(vol.dims),
        "dtype": "f32",
        "order": "x-fastest",
        "endianness": "little",
    }
    header.write_text(json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8")
    vol.data.astype("<f4", copy=False).tofile(raw)
    return header, raw


def read_volume(path) -> Volume:
    """Read a volume written by :func:`write_volume`, or an MRC file (mode 2)."""
    path = Path(path)
    if path.suffix.lower() in (".mrc", ".rec", ".map"):
        return read_mrc(path)
    header = _header_path(path)
    raw = header.with_suffix(".raw")
    if not header.exists():
        raise VolumeFormatError(f"header file not found: {header}")
    if not raw.exists():
        raise VolumeFormatError(f"raw file not found: {raw}")
    try:
        meta = json.loads(header.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise VolumeFormatError(f"invalid JSON header {header}: {exc}") from exc
    if meta.get("dtype", "f32") != "f32":
        raise VolumeFormatError(f"unsupported dtype {meta.get('dtype')!r}")
    if meta.get("order", "x-fastest") != "x-fastest":
        raise VolumeFormatError(f"unsupported order {meta.get('order')!r}")
    if meta.get("endianness", "little") != "little":
        raise VolumeFormatError(f"unsupported endianness {meta.get('endianness')!r}")
    try:
        nx, ny, nz = _check_dims(meta["dims"])
    except (KeyError, TypeError, ValueError) as exc:
        raise VolumeFormatError(f"bad dims in {header}: {exc}") from exc
    expected = nx * ny * nz * 4
    actual = raw.stat().st_size
    if actual != expected:
        raise VolumeFormatError(
            f"size mismatch: header declares {nx * ny * nz} voxels ({expected} bytes), "
            f"raw file has {actual} bytes"
        )
    arr = np.fromfile(raw, dtype="<f4").reshape(nz, ny, nx)
    if not np.all(np.isfinite(arr)):
        raise VolumeFormatError(f"non-finite values in {raw}")
    return Volume(arr.astype(np.float32))


def read_mrc(path) -> Volume:
    """Read a mode-2 (float32) MRC2014 file into a Volume."""
    import mrcfile

    path = Path(path)
    if not path.exists():
        raise VolumeFormatError(f"file not found: {path}")
    with mrcfile.open(path, permissive=True) as mrc:
        if int(mrc.header.mode) != 2:
            raise VolumeFormatError(f"unsupported MRC mode {int(mrc.header.mode)} (only mode 2)")
        arr = np.array(mrc.data, dtype=np.float32)
    if not np.all(np.isfinite(arr)):
        raise VolumeFormatError(f"non-finite values in {path}")
    return Volume(arr)


def write_pgm(vol: Volume, path, z: int | None = None) -> Path:
    """Export one z-slice as binary PGM, min-max scaled to 0..255."""
    nz = vol.data.shape[0]
    z = nz // 2 if z is None else int(z)
    if not 0 <= z < nz:
        raise IndexError(f"slice {z} outside 0..{nz - 1}")
    sl = vol.data[z].astype(np.float64)
    lo, hi = float(sl.min()), float(sl.max())
    if hi > lo:
        img = np.round((sl - lo) * (255.0 / (hi - lo)))
    else:
        img = np.zeros_like(sl)
    img = img.astype(np.uint8)
    path = Path(path)
    ny, nx = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    return path


def volume_stats(vol: Volume) -> dict:
    d = vol.data
    return {
        "dims": list(vol.dims),
        "min": float(d.min()),
        "max": float(d.max()),
        "mean": float(d.mean(dtype=np.float64)),
        "std": float(d.std(dtype=np.float64)),
        "median": float(np.median(d)),
        "nonzero": int(np.count_nonzero(d)),
        "voxels": int(math.prod(vol.dims)),
    }
