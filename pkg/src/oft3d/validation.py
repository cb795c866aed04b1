"""Input checks shared by the estimator and the CLI."""

import numpy as np

from oft3d.volume import Volume


def check_image(X, *, allow_2d=True) -> tuple[Volume, bool]:
    """Coerce ``X`` to a :class:`Volume`.

    Returns the volume and whether the input was a plain 2D array, so
    callers can hand back an array of the same shape.
    """
    if isinstance(X, Volume):
        return X, False
    arr = np.asarray(X)
    if arr.dtype == object or not np.issubdtype(arr.dtype, np.number):
        raise TypeError(f"expected a numeric array, got dtype {arr.dtype}")
    if arr.ndim == 2:
        if not allow_2d:
            raise ValueError("2D input is not accepted here")
        was_2d = True
    elif arr.ndim == 3:
        was_2d = False
    else:
        raise ValueError(f"expected a 2D (ny, nx) or 3D (nz, ny, nx) array, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(arr)):
        raise ValueError("input contains NaN or infinite values")
    return Volume(arr), was_2d


def check_positive(name, value, integer=False):
    if value is None:
        return None
    if integer:
        if int(value) != value or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")
        return int(value)
    value = float(value)
    if not value > 0 or not np.isfinite(value):
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value
