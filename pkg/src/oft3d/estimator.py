"""scikit-learn compatible wrapper around the pipeline."""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from oft3d.directions import directions_for
from oft3d.measures import MeasureStack
from oft3d.transform import CombineMode, PipelineConfig, run_pipeline
from oft3d.validation import check_image, check_positive


class OrientationFieldTransform(TransformerMixin, BaseEstimator):
    """Curve enhancement by the orientation field transform.

    The transform is unsupervised and stateless apart from the direction
    set; ``fit`` only validates parameters and records the input
    dimensionality.

    Parameters
    ----------
    epsilon : float, default=4.5
        Integration path length in voxels. About 1.5x the thickness of the
        curves to enhance works well.
    n_directions : int or None, default=None
        Size of the direction set; None picks 36 for 2D and 96 for 3D.
    mode : {"all", "no-mean-align", "line-pair"}, default="all"
        Which measures enter the fused product.
    step : float, default=1.0
        Target spacing of integration samples, in voxels.
    invert : bool, default=False
        Treat dark curves on a bright background.
    normalize : bool, default=False
        Min-max scale the output to [0, 1].
    n_jobs : int or None, default=None
        Worker threads for the voxel kernels. Results do not depend on it.

    Attributes
    ----------
    directions_ : DirectionSet
    n_dims_in_ : int
        2 or 3.
    """

    def __init__(self, epsilon=4.5, n_directions=None, mode="all", step=1.0,
                 invert=False, normalize=False, n_jobs=None):
        self.epsilon = epsilon
        self.n_directions = n_directions
        self.mode = mode
        self.step = step
        self.invert = invert
        self.normalize = normalize
        self.n_jobs = n_jobs

    def _config(self) -> PipelineConfig:
        return PipelineConfig(
            epsilon=check_positive("epsilon", self.epsilon),
            k_directions=check_positive("n_directions", self.n_directions, integer=True),
            mode=CombineMode.parse(self.mode),
            step_hint=check_positive("step", self.step),
            invert=bool(self.invert),
            normalize_output=bool(self.normalize),
        )

    def fit(self, X, y=None):
        vol, _ = check_image(X)
        self._config()
        self.n_dims_in_ = vol.ndim
        self.directions_ = directions_for(vol.ndim, self.n_directions)
        return self

    def _check_input(self, X):
        check_is_fitted(self, "directions_")
        vol, was_2d = check_image(X)
        if vol.ndim != self.n_dims_in_:
            raise ValueError(
                f"fitted on {self.n_dims_in_}D input, got {vol.ndim}D input"
            )
        return vol, was_2d

    def compute_measures(self, X) -> MeasureStack:
        """The six measure volumes for ``X``."""
        vol, _ = self._check_input(X)
        _, stack = run_pipeline(vol, self._config(), n_threads=self.n_jobs)
        return stack

    def transform(self, X):
        """Enhanced image, same shape as ``X`` (float32)."""
        vol, was_2d = self._check_input(X)
        enhanced, _ = run_pipeline(vol, self._config(), n_threads=self.n_jobs)
        return enhanced.data[0] if was_2d else enhanced.data
