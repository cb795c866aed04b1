"""
Measure fusion and the end-to-end orientation field transform.

The pipeline runs the line sweep (max, mean, deviation and argmax
direction), then the alignment sweep over the stored orientation field,
then fuses the selected measures by a clamped product.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import asdict, dataclass

import numpy as np

from oft3d import _kernels
from oft3d._parallel import threads
from oft3d.directions import directions_for
from oft3d.integrals import IntegralParams
from oft3d.measures import MeasureStack, alignment_measures, line_measures
from oft3d.volume import Volume

logger = logging.getLogger(__name__)


class CombineMode(str, enum.Enum):
    """Which measures enter the product."""

    ALL = "all"
    NO_MEAN_ALIGN = "no-mean-align"
    LINE_PAIR = "line-pair"

    @property
    def factors(self) -> tuple[int, ...]:
        """1-based indices of the participating measures."""
        return {
            CombineMode.ALL: (1, 2, 3, 4, 5, 6),
            CombineMode.NO_MEAN_ALIGN: (1, 2, 3, 5, 6),
            CombineMode.LINE_PAIR: (1, 3),
        }[self]

    @classmethod
    def parse(cls, value) -> "CombineMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for mode in cls:
            if mode.value == key:
                return mode
        raise ValueError(f"unknown combine mode {value!r}; expected one of {[m.value for m in cls]}")


@dataclass(frozen=True)
class PipelineConfig:
    epsilon: float
    k_directions: int | None = None
    mode: CombineMode = CombineMode.ALL
    step_hint: float = 1.0
    invert: bool = False
    normalize_output: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", CombineMode.parse(self.mode))
        # validates epsilon / step
        IntegralParams(self.epsilon, self.step_hint)
        if self.k_directions is not None and int(self.k_directions) < 2:
            raise ValueError(f"k_directions must be >= 2, got {self.k_directions}")

    @property
    def params(self) -> IntegralParams:
        return IntegralParams(self.epsilon, self.step_hint)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d


def min_max_normalize(vol: Volume) -> Volume:
    """Affine map onto [0, 1]; constant volumes become all zeros."""
    d = vol.data.astype(np.float64)
    lo, hi = d.min(), d.max()
    if hi <= lo:
        return Volume(np.zeros_like(vol.data))
    return Volume((d - lo) / (hi - lo))


def combine(stack: MeasureStack, mode=CombineMode.ALL, normalize_output: bool = False) -> Volume:
    """Product of the measures selected by ``mode``, each clamped below at zero."""
    mode = CombineMode.parse(mode)
    use = np.zeros(6, dtype=np.bool_)
    for i in mode.factors:
        use[i - 1] = True
    out = Volume(_kernels.combine_product(stack.as_array(), use))
    if normalize_output:
        out = min_max_normalize(out)
    return out


def invert_intensity(vol: Volume) -> Volume:
    """Dark curves to bright: ``max(I) - I``, so the result spans ``[0, max - min]``."""
    d = vol.data.astype(np.float64)
    return Volume(d.max() - d)


def run_pipeline(vol: Volume, cfg: PipelineConfig, n_threads=None, timings: dict | None = None):
    """Full transform.

    Parameters
    ----------
    vol : Volume
    cfg : PipelineConfig
    n_threads : int, optional
        Worker bound for the voxel kernels; output does not depend on it.
    timings : dict, optional
        Filled with wall-clock seconds per stage.

    Returns
    -------
    enhanced : Volume
    stack : MeasureStack
    """
    if timings is None:
        timings = {}
    dirs = directions_for(vol.ndim, cfg.k_directions)
    p = cfg.params
    with threads(n_threads):
        t0 = time.perf_counter()
        if cfg.invert:
            vol = invert_intensity(vol)
        w1, w3, w5, field = line_measures(vol, dirs, p)
        t1 = time.perf_counter()
        w2, w4, w6 = alignment_measures(field, dirs, p)
        t2 = time.perf_counter()
        stack = MeasureStack(w1, w2, w3, w4, w5, w6)
        enhanced = combine(stack, cfg.mode, cfg.normalize_output)
        t3 = time.perf_counter()
    timings["line_sweep"] = t1 - t0
    timings["alignment_sweep"] = t2 - t1
    timings["combine"] = t3 - t2
    logger.debug("pipeline timings: %s", timings)
    return enhanced, stack
