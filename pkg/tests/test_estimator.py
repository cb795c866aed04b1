import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from oft3d.estimator import OrientationFieldTransform
from oft3d.transform import PipelineConfig, run_pipeline
from oft3d.volume import Volume


def test_params_roundtrip():
    est = OrientationFieldTransform(epsilon=3.0, n_directions=12, mode="line-pair")
    params = est.get_params()
    assert params["epsilon"] == 3.0 and params["mode"] == "line-pair"
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(epsilon=5.0)
    assert est.epsilon == 5.0


def test_transform_matches_pipeline(rng):
    X = rng.random((8, 9, 10)).astype(np.float32)
    est = OrientationFieldTransform(epsilon=3.0, n_directions=12)
    out = est.fit_transform(X)
    assert out.shape == X.shape and out.dtype == np.float32
    ref, _ = run_pipeline(Volume(X), PipelineConfig(3.0, k_directions=12))
    assert np.array_equal(out, ref.data)
    assert est.n_dims_in_ == 3 and len(est.directions_) == 12


def test_2d_input(rng):
    X = rng.random((20, 24))
    est = OrientationFieldTransform(epsilon=3.0).fit(X)
    assert len(est.directions_) == 36
    assert est.transform(X).shape == X.shape


def test_dimension_mismatch(rng):
    est = OrientationFieldTransform(epsilon=3.0, n_directions=8).fit(rng.random((6, 6)))
    with pytest.raises(ValueError, match="fitted on 2D"):
        est.transform(rng.random((6, 6, 6)))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        OrientationFieldTransform().transform(np.zeros((4, 4, 4)))


@pytest.mark.parametrize(
    "kwargs", [{"epsilon": -1.0}, {"n_directions": 2.5}, {"step": 0}, {"mode": "sum"}]
)
def test_bad_params(kwargs):
    with pytest.raises(ValueError):
        OrientationFieldTransform(**kwargs).fit(np.zeros((4, 4, 4)))


@pytest.mark.parametrize("X", [np.zeros(5), np.zeros((2, 2, 2, 2)), np.array([[np.nan, 1.0]])])
def test_bad_input(X):
    with pytest.raises(ValueError):
        OrientationFieldTransform().fit(X)


def test_measures(rng):
    X = rng.random((6, 6, 6))
    stack = OrientationFieldTransform(epsilon=3.0, n_directions=8).fit(X).compute_measures(X)
    assert stack.as_array().shape == (6, 6, 6, 6)


def test_in_sklearn_pipeline(rng):
    X = rng.random((6, 7, 8))
    pipe = make_pipeline(
        FunctionTransformer(lambda a: a * 2.0),
        OrientationFieldTransform(epsilon=3.0, n_directions=8, normalize=True),
    )
    out = pipe.fit_transform(X)
    assert out.min() == 0.0 and out.max() == 1.0
