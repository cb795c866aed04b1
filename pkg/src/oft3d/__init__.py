"""Orientation field transform for enhancing curve-like structures in 2D/3D images."""

from oft3d.directions import DirectionSet, directions_2d, directions_3d
from oft3d.integrals import (
    IntegralParams,
    OrientationField,
    alignment_integral,
    line_integral,
    orientation_field,
)
from oft3d.measures import MeasureStack, alignment_measures, compute_measures, line_measures
from oft3d.transform import CombineMode, PipelineConfig, combine, run_pipeline
from oft3d.volume import (
    VectorField,
    Volume,
    read_volume,
    sample_scalar,
    sample_vector_nearest,
    write_volume,
)

__version__ = "0.1.0"

__all__ = [
    "CombineMode",
    "DirectionSet",
    "IntegralParams",
    "MeasureStack",
    "OrientationField",
    "PipelineConfig",
    "VectorField",
    "Volume",
    "alignment_integral",
    "alignment_measures",
    "combine",
    "compute_measures",
    "directions_2d",
    "directions_3d",
    "line_integral",
    "line_measures",
    "orientation_field",
    "read_volume",
    "run_pipeline",
    "sample_scalar",
    "sample_vector_nearest",
    "write_volume",
]
